#pragma once
// Run configuration: strict JSON schema with materialized defaults, digest
// of the resolved configuration, and serialization for round-trips.

#include <optional>
#include <string>

#include "json.hpp"

#include "goyld/ldp.hpp"
#include "goyld/rate.hpp"

namespace goyld {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateBlock {
  RateQuery query;
  OptConfig opt;
};

struct VerifyBlock {
  std::string suite = "operators";
};

struct SimulateBlock {
  int n_paths = 1;
};

struct RunConfig {
  std::string experiment = "simulate";
  std::uint64_t seed = 0;
  std::string output_dir = "goyld_out";
  JumpDriftWeight jump_weight = JumpDriftWeight::paper_literal;

  ModelParams model;
  ShellState initial_state;

  double epsilon = 0.1;
  CovarianceQ q;
  MarkSpace marks;
  FamilyKind family_kind = FamilyKind::additive;
  std::vector<double> sigma_scale;
  std::vector<ShellState> jump_amps;

  IntegratorConfig integrator;
  std::optional<ControlPath> control;

  RateBlock rate;
  VerifyBlock verify;
  SimulateBlock sim;

  nlohmann::json resolved;  // canonical resolved form, defaults materialized

  CoefficientFamily family() const;
  std::string digest() const;
};

RunConfig default_config();
RunConfig load_config_json(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);
nlohmann::json serialize(const RunConfig& cfg);

nlohmann::json control_path_to_json(const ControlPath& c);
ControlPath control_path_from_json(const nlohmann::json& j);

}  // namespace goyld
