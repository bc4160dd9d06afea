#pragma once
// Experiment orchestration: dispatches a validated RunConfig, writes CSV and
// JSON artifacts plus a manifest of per-file content hashes.

#include <string>

#include "goyld/config.hpp"

namespace goyld {

// Exit codes: 0 pass, 2 validation error, 3 numerical blow-up,
// 4 verification-verdict failure.
struct RunOutcome {
  int exit_code = 0;
  nlohmann::json manifest;
};

RunOutcome run(const RunConfig& cfg);

// Concatenates every manifest.json found under dir into a summary table.
int merge_reports(const std::string& dir, const std::string& out_path);

}  // namespace goyld
