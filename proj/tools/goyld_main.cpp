// goyld: simulate the stochastic shell model, solve controlled skeletons,
// minimize rare-event control costs and run the verification suites.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "goyld/runner.hpp"
#include "goyld/version.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<long> seed;
  std::optional<double> epsilon;
  std::optional<std::string> out;
  std::optional<std::string> jump_weight;
  std::optional<int> threads;
  std::optional<double> target_energy;
  std::string suite = "operators";
  std::string merge_dir;
};

goyld::RunConfig build_config(const Flags& f, const std::string& experiment) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw goyld::ConfigError("config: cannot open " + f.config_path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw goyld::ConfigError(std::string("config: parse error in ") + f.config_path +
                               ": " + e.what());
    }
  }
  auto notice = [](const std::string& what) {
    std::cerr << "notice: flag --" << what << " overrides the config value\n";
  };
  j["experiment"] = experiment;
  if (f.seed) {
    if (j.contains("seed")) notice("seed");
    j["seed"] = *f.seed;
  }
  if (f.epsilon) {
    if (j.contains("noise") && j["noise"].contains("epsilon")) notice("epsilon");
    j["noise"]["epsilon"] = *f.epsilon;
  }
  if (f.out) {
    if (j.contains("output_dir")) notice("out");
    j["output_dir"] = *f.out;
  }
  if (f.jump_weight) {
    if (j.contains("jump_drift_weight")) notice("jump-drift-weight");
    j["jump_drift_weight"] = *f.jump_weight;
  }
  if (experiment == "verify") j["verify"]["suite"] = f.suite;
  if (f.target_energy) {
    j["rate"]["target_kind"] = "terminal_energy_above";
    j["rate"]["target_energy"] = *f.target_energy;
  }
  return goyld::load_config_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic shell model with small-noise rare-event tooling"};
  app.set_version_flag("--version", std::string("goyld ") + goyld::kToolVersion);
  app.require_subcommand(1);

  Flags f;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--seed", f.seed, "master seed (overrides config)");
    cmd->add_option("--epsilon", f.epsilon, "noise scale (overrides config)");
    cmd->add_option("--out", f.out, "output directory (overrides config)");
    cmd->add_option("--jump-drift-weight", f.jump_weight,
                    "paper_literal or standard (overrides config)");
    cmd->add_option("--threads", f.threads, "worker thread cap (GOYLD_THREADS also applies)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "integrate the stochastic model");
  add_common(sim);
  CLI::App* skel = app.add_subcommand("skeleton", "integrate the deterministic skeleton");
  add_common(skel);
  CLI::App* rate = app.add_subcommand("rate", "minimize the control cost for a target");
  add_common(rate);
  rate->add_option("--target-energy", f.target_energy, "terminal energy threshold");
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  add_common(verify);
  verify->add_option("--suite", f.suite,
                     "operators, noise, energy, monotonicity, weak-convergence or ldp");
  CLI::App* report = app.add_subcommand("report", "merge run manifests into a summary");
  report->add_option("--merge", f.merge_dir, "directory to scan for manifests")->required();
  report->add_option("--out", f.out, "summary CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (f.threads) goyld::set_worker_threads(*f.threads);

  try {
    if (report->parsed()) {
      const std::string out_path = f.out ? *f.out : "merged_report.csv";
      return goyld::merge_reports(f.merge_dir, out_path);
    }
    std::string experiment = "simulate";
    if (skel->parsed()) experiment = "skeleton";
    if (rate->parsed()) experiment = "rate";
    if (verify->parsed()) experiment = "verify";
    const goyld::RunConfig cfg = build_config(f, experiment);
    const goyld::RunOutcome outcome = goyld::run(cfg);
    return outcome.exit_code;
  } catch (const goyld::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const goyld::BlowupError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
