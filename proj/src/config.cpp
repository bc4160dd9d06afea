#include "goyld/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace goyld {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ctx + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) fail("unknown key \"" + item.key() + "\" in " + ctx);
  }
}

double as_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx + " must be a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(ctx + " must be an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx + " must be a string");
  return j.get<std::string>();
}

cplx as_complex(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2) fail(ctx + " must be a [re, im] pair");
  return {as_number(j[0], ctx + "[0]"), as_number(j[1], ctx + "[1]")};
}

ShellState as_complex_vector(const json& j, const std::string& ctx, int expected) {
  if (!j.is_array()) fail(ctx + " must be an array of [re, im] pairs");
  if (expected >= 0 && static_cast<int>(j.size()) != expected) {
    fail(ctx + " must have length " + std::to_string(expected));
  }
  ShellState out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_complex(j[i], ctx + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> as_real_vector_or_scalar(const json& j, const std::string& ctx, int n) {
  std::vector<double> out;
  if (j.is_number()) {
    out.assign(n, j.get<double>());
    return out;
  }
  if (!j.is_array()) fail(ctx + " must be a number or an array of numbers");
  if (static_cast<int>(j.size()) != n) {
    fail(ctx + " must have length " + std::to_string(n));
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], ctx + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json complex_vector_to_json(const ShellState& v) {
  json out = json::array();
  for (const cplx& z : v) out.push_back(json::array({z.real(), z.imag()}));
  return out;
}

}  // namespace

json control_path_to_json(const ControlPath& c) {
  json j;
  j["time_grid"] = c.time_grid;
  json psi = json::array();
  for (const auto& p : c.psi) psi.push_back(complex_vector_to_json(p));
  j["psi"] = psi;
  j["phi"] = c.phi;
  return j;
}

ControlPath control_path_from_json(const json& j) {
  check_keys(j, "control", {"time_grid", "psi", "phi"});
  ControlPath c;
  if (!j.contains("time_grid") || !j.contains("psi") || !j.contains("phi")) {
    fail("control requires time_grid, psi and phi");
  }
  for (const auto& t : j.at("time_grid")) c.time_grid.push_back(as_number(t, "control.time_grid"));
  for (const auto& p : j.at("psi")) c.psi.push_back(as_complex_vector(p, "control.psi", -1));
  for (const auto& node : j.at("phi")) {
    std::vector<double> row;
    for (const auto& v : node) row.push_back(as_number(v, "control.phi"));
    c.phi.push_back(std::move(row));
  }
  return c;
}

CoefficientFamily RunConfig::family() const {
  return CoefficientFamily::make(family_kind, sigma_scale, jump_amps, marks, q);
}

std::string RunConfig::digest() const {
  // identifies the computation; the output location does not affect results
  json j = resolved;
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

RunConfig default_config() { return load_config_json(json::object()); }

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(std::string("parse error in ") + path + ": " + e.what());
  }
  return load_config_json(j);
}

RunConfig load_config_json(const json& j) {
  check_keys(j, "config root",
             {"experiment", "seed", "output_dir", "jump_drift_weight", "model", "noise",
              "integrator", "control", "rate", "verify", "simulate"});
  RunConfig cfg;

  cfg.experiment = j.contains("experiment") ? as_string(j["experiment"], "experiment")
                                            : "simulate";
  if (cfg.experiment != "simulate" && cfg.experiment != "skeleton" &&
      cfg.experiment != "rate" && cfg.experiment != "verify") {
    fail("experiment must be one of simulate, skeleton, rate, verify");
  }
  if (j.contains("seed")) {
    const long s = as_integer(j["seed"], "seed");
    if (s < 0) fail("seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("output_dir")) cfg.output_dir = as_string(j["output_dir"], "output_dir");
  if (j.contains("jump_drift_weight")) {
    try {
      cfg.jump_weight =
          jump_drift_weight_from_string(as_string(j["jump_drift_weight"], "jump_drift_weight"));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  // --- model ---------------------------------------------------------------
  const json jm = j.contains("model") ? j["model"] : json::object();
  check_keys(jm, "model",
             {"nu", "k0", "n_shells", "goy_coeffs", "canonical_b", "b_enabled",
              "initial_state", "forcing"});
  const double nu = jm.contains("nu") ? as_number(jm["nu"], "model.nu") : 1.0;
  const double k0 = jm.contains("k0") ? as_number(jm["k0"], "model.k0") : 1.0;
  const long n_shells = jm.contains("n_shells") ? as_integer(jm["n_shells"], "model.n_shells") : 8;
  if (!(nu > 0.0)) fail("model.nu must be positive");
  if (!(k0 > 0.0)) fail("model.k0 must be positive");
  if (n_shells < 3 || n_shells > 64) fail("model.n_shells must be in [3, 64]");
  cfg.model.nu = nu;
  cfg.model.grid = ShellGrid::make(k0, static_cast<int>(n_shells));
  if (jm.contains("goy_coeffs")) {
    const json& gc = jm["goy_coeffs"];
    if (!gc.is_array() || gc.size() != 3) fail("model.goy_coeffs must be [a, b, c]");
    for (int i = 0; i < 3; ++i) cfg.model.goy_coeffs[i] = as_number(gc[i], "model.goy_coeffs");
  }
  if (jm.contains("canonical_b")) {
    if (!jm["canonical_b"].is_boolean()) fail("model.canonical_b must be a boolean");
    cfg.model.canonical_b = jm["canonical_b"].get<bool>();
  }
  if (jm.contains("b_enabled")) {
    if (!jm["b_enabled"].is_boolean()) fail("model.b_enabled must be a boolean");
    cfg.model.b_enabled = jm["b_enabled"].get<bool>();
  }
  const int n = cfg.model.grid.n_shells;
  if (jm.contains("initial_state")) {
    cfg.initial_state = as_complex_vector(jm["initial_state"], "model.initial_state", n);
    if (!all_finite(cfg.initial_state)) fail("model.initial_state must be finite");
  } else {
    cfg.initial_state = basis_state(n, 0);
  }
  if (jm.contains("forcing") && !jm["forcing"].is_null()) {
    const json& jf = jm["forcing"];
    check_keys(jf, "model.forcing", {"times", "values"});
    if (jf.contains("times")) {
      for (const auto& t : jf["times"]) {
        cfg.model.forcing.times.push_back(as_number(t, "model.forcing.times"));
      }
    }
    if (jf.contains("values")) {
      for (const auto& v : jf["values"]) {
        cfg.model.forcing.values.push_back(as_complex_vector(v, "model.forcing.values", n));
      }
    }
    if (cfg.model.forcing.times.size() != cfg.model.forcing.values.size()) {
      fail("model.forcing.times and values must have equal length");
    }
  }
  try {
    validate_params(cfg.model);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  // --- noise ----------------------------------------------------------------
  const json jn = j.contains("noise") ? j["noise"] : json::object();
  check_keys(jn, "noise", {"epsilon", "q", "marks", "family"});
  cfg.epsilon = jn.contains("epsilon") ? as_number(jn["epsilon"], "noise.epsilon") : 0.1;
  if (!(cfg.epsilon >= 0.0)) fail("noise.epsilon must be nonnegative");
  try {
    cfg.q = CovarianceQ::make(jn.contains("q")
                                  ? as_real_vector_or_scalar(jn["q"], "noise.q", n)
                                  : std::vector<double>(n, 1.0));
  } catch (const std::invalid_argument& e) {
    fail(std::string("noise.q: ") + e.what());
  }
  {
    std::vector<std::string> labels;
    std::vector<double> weights;
    if (jn.contains("marks") && !jn["marks"].is_null()) {
      const json& jk = jn["marks"];
      check_keys(jk, "noise.marks", {"labels", "weights"});
      if (jk.contains("labels")) {
        for (const auto& l : jk["labels"]) labels.push_back(as_string(l, "noise.marks.labels"));
      }
      if (jk.contains("weights")) {
        for (const auto& w : jk["weights"]) {
          weights.push_back(as_number(w, "noise.marks.weights"));
        }
      }
      if (labels.empty() && !weights.empty()) {
        for (std::size_t i = 0; i < weights.size(); ++i) labels.push_back("z" + std::to_string(i + 1));
      }
    }
    try {
      cfg.marks = MarkSpace::make(std::move(labels), std::move(weights));
    } catch (const std::invalid_argument& e) {
      fail(std::string("noise.marks: ") + e.what());
    }
  }
  {
    const json jf = jn.contains("family") ? jn["family"] : json::object();
    check_keys(jf, "noise.family", {"kind", "sigma_scale", "jump_amplitudes"});
    if (jf.contains("kind")) {
      try {
        cfg.family_kind = family_kind_from_string(as_string(jf["kind"], "noise.family.kind"));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    }
    cfg.sigma_scale = jf.contains("sigma_scale")
                          ? as_real_vector_or_scalar(jf["sigma_scale"], "noise.family.sigma_scale", n)
                          : std::vector<double>(n, 1.0);
    if (jf.contains("jump_amplitudes")) {
      for (const auto& c : jf["jump_amplitudes"]) {
        cfg.jump_amps.push_back(as_complex_vector(c, "noise.family.jump_amplitudes", n));
      }
    }
    if (static_cast<int>(cfg.jump_amps.size()) != cfg.marks.size()) {
      if (cfg.jump_amps.empty() && cfg.marks.size() > 0) {
        fail("noise.family.jump_amplitudes required: one amplitude vector per mark");
      }
      if (!cfg.jump_amps.empty()) {
        fail("noise.family.jump_amplitudes must match the number of marks");
      }
    }
    try {
      (void)cfg.family();  // audits dimensions and computes K, L
    } catch (const std::invalid_argument& e) {
      fail(std::string("noise.family: ") + e.what());
    }
  }

  // --- integrator -------------------------------------------------------------
  const json ji = j.contains("integrator") ? j["integrator"] : json::object();
  check_keys(ji, "integrator", {"dt", "T", "scheme", "record_stride"});
  if (ji.contains("dt")) cfg.integrator.dt = as_number(ji["dt"], "integrator.dt");
  if (ji.contains("T")) cfg.integrator.T = as_number(ji["T"], "integrator.T");
  if (ji.contains("scheme")) cfg.integrator.scheme = as_string(ji["scheme"], "integrator.scheme");
  if (ji.contains("record_stride")) {
    cfg.integrator.record_stride =
        static_cast<int>(as_integer(ji["record_stride"], "integrator.record_stride"));
  }
  cfg.integrator.epsilon = cfg.epsilon;
  try {
    cfg.integrator.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  // --- control -----------------------------------------------------------------
  if (j.contains("control") && !j["control"].is_null()) {
    const json& jc = j["control"];
    json inline_ctrl;
    if (jc.is_string()) {
      std::ifstream in(jc.get<std::string>());
      if (!in) fail("control: cannot open " + jc.get<std::string>());
      try {
        inline_ctrl = json::parse(in);
      } catch (const json::parse_error& e) {
        fail(std::string("control: parse error: ") + e.what());
      }
    } else {
      inline_ctrl = jc;
    }
    ControlPath c = control_path_from_json(inline_ctrl);
    try {
      c.validate(n, cfg.marks.size(), cfg.q);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    cfg.control = std::move(c);
  }

  // --- rate ----------------------------------------------------------------------
  const json jr = j.contains("rate") ? j["rate"] : json::object();
  check_keys(jr, "rate",
             {"target_kind", "target_energy", "target_state", "match_tolerance", "budget", "opt"});
  std::string target_kind = jr.contains("target_kind")
                                ? as_string(jr["target_kind"], "rate.target_kind")
                                : "terminal_energy_above";
  if (target_kind == "terminal_energy_above") {
    cfg.rate.query.kind = RateQuery::Kind::terminal_energy_above;
  } else if (target_kind == "terminal_state") {
    cfg.rate.query.kind = RateQuery::Kind::terminal_state;
  } else {
    fail("rate.target_kind must be terminal_energy_above or terminal_state");
  }
  cfg.rate.query.target_energy =
      jr.contains("target_energy") ? as_number(jr["target_energy"], "rate.target_energy") : 2.0;
  if (cfg.rate.query.kind == RateQuery::Kind::terminal_energy_above &&
      !(cfg.rate.query.target_energy > 0.0)) {
    fail("rate.target_energy must be positive");
  }
  if (jr.contains("target_state") && !jr["target_state"].is_null()) {
    cfg.rate.query.target_state = as_complex_vector(jr["target_state"], "rate.target_state", n);
  } else if (cfg.rate.query.kind == RateQuery::Kind::terminal_state) {
    fail("rate.target_state required for target_kind terminal_state");
  }
  cfg.rate.query.match_tolerance = jr.contains("match_tolerance")
                                       ? as_number(jr["match_tolerance"], "rate.match_tolerance")
                                       : 1e-3;
  if (!(cfg.rate.query.match_tolerance > 0.0)) fail("rate.match_tolerance must be positive");
  cfg.rate.query.budget = jr.contains("budget") ? as_number(jr["budget"], "rate.budget") : 1000.0;
  if (!(cfg.rate.query.budget > 0.0)) fail("rate.budget must be positive");
  {
    const json jo = jr.contains("opt") ? jr["opt"] : json::object();
    check_keys(jo, "rate.opt",
               {"ctrl_nodes", "max_iters", "restarts", "phi_min", "phi_max"});
    if (jo.contains("ctrl_nodes")) {
      cfg.rate.opt.ctrl_nodes = static_cast<int>(as_integer(jo["ctrl_nodes"], "rate.opt.ctrl_nodes"));
    }
    if (jo.contains("max_iters")) {
      cfg.rate.opt.max_iters = static_cast<int>(as_integer(jo["max_iters"], "rate.opt.max_iters"));
    }
    if (jo.contains("restarts")) {
      cfg.rate.opt.restarts = static_cast<int>(as_integer(jo["restarts"], "rate.opt.restarts"));
    }
    if (jo.contains("phi_min")) cfg.rate.opt.phi_min = as_number(jo["phi_min"], "rate.opt.phi_min");
    if (jo.contains("phi_max")) cfg.rate.opt.phi_max = as_number(jo["phi_max"], "rate.opt.phi_max");
    if (cfg.rate.opt.ctrl_nodes < 1 || cfg.rate.opt.ctrl_nodes > 512) {
      fail("rate.opt.ctrl_nodes must be in [1, 512]");
    }
    if (cfg.rate.opt.max_iters < 1) fail("rate.opt.max_iters must be positive");
    if (cfg.rate.opt.restarts < 0) fail("rate.opt.restarts must be nonnegative");
    if (!(cfg.rate.opt.phi_min > 0.0)) fail("rate.opt.phi_min must be positive");
    if (!(cfg.rate.opt.phi_max > cfg.rate.opt.phi_min)) {
      fail("rate.opt.phi_max must exceed phi_min");
    }
    cfg.rate.opt.seed = cfg.seed;
  }

  // --- verify / simulate -----------------------------------------------------------
  const json jv = j.contains("verify") ? j["verify"] : json::object();
  check_keys(jv, "verify", {"suite"});
  if (jv.contains("suite")) cfg.verify.suite = as_string(jv["suite"], "verify.suite");
  const char* suites[] = {"operators", "noise", "energy", "monotonicity", "weak-convergence", "ldp"};
  bool suite_ok = false;
  for (const char* s : suites) {
    if (cfg.verify.suite == s) suite_ok = true;
  }
  if (!suite_ok) fail("verify.suite must be one of operators, noise, energy, monotonicity, weak-convergence, ldp");

  const json js = j.contains("simulate") ? j["simulate"] : json::object();
  check_keys(js, "simulate", {"n_paths"});
  if (js.contains("n_paths")) {
    cfg.sim.n_paths = static_cast<int>(as_integer(js["n_paths"], "simulate.n_paths"));
  }
  if (cfg.sim.n_paths < 1) fail("simulate.n_paths must be positive");

  cfg.resolved = serialize(cfg);
  return cfg;
}

json serialize(const RunConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["jump_drift_weight"] = to_string(cfg.jump_weight);

  json jm;
  jm["nu"] = cfg.model.nu;
  jm["k0"] = cfg.model.grid.k0;
  jm["n_shells"] = cfg.model.grid.n_shells;
  jm["goy_coeffs"] = cfg.model.goy_coeffs;
  jm["canonical_b"] = cfg.model.canonical_b;
  jm["b_enabled"] = cfg.model.b_enabled;
  jm["initial_state"] = complex_vector_to_json(cfg.initial_state);
  json jf;
  jf["times"] = cfg.model.forcing.times;
  json fvals = json::array();
  for (const auto& v : cfg.model.forcing.values) fvals.push_back(complex_vector_to_json(v));
  jf["values"] = fvals;
  jm["forcing"] = jf;
  j["model"] = jm;

  json jn;
  jn["epsilon"] = cfg.epsilon;
  jn["q"] = cfg.q.q;
  json jk;
  jk["labels"] = cfg.marks.labels;
  jk["weights"] = cfg.marks.weights;
  jn["marks"] = jk;
  json jfam;
  jfam["kind"] = to_string(cfg.family_kind);
  jfam["sigma_scale"] = cfg.sigma_scale;
  json amps = json::array();
  for (const auto& c : cfg.jump_amps) amps.push_back(complex_vector_to_json(c));
  jfam["jump_amplitudes"] = amps;
  jn["family"] = jfam;
  j["noise"] = jn;

  json ji;
  ji["dt"] = cfg.integrator.dt;
  ji["T"] = cfg.integrator.T;
  ji["scheme"] = cfg.integrator.scheme;
  ji["record_stride"] = cfg.integrator.record_stride;
  j["integrator"] = ji;

  j["control"] = cfg.control ? control_path_to_json(*cfg.control) : json();

  json jr;
  jr["target_kind"] = cfg.rate.query.kind == RateQuery::Kind::terminal_energy_above
                          ? "terminal_energy_above"
                          : "terminal_state";
  jr["target_energy"] = cfg.rate.query.target_energy;
  jr["target_state"] = cfg.rate.query.target_state.empty()
                           ? json()
                           : complex_vector_to_json(cfg.rate.query.target_state);
  jr["match_tolerance"] = cfg.rate.query.match_tolerance;
  jr["budget"] = cfg.rate.query.budget;
  json jo;
  jo["ctrl_nodes"] = cfg.rate.opt.ctrl_nodes;
  jo["max_iters"] = cfg.rate.opt.max_iters;
  jo["restarts"] = cfg.rate.opt.restarts;
  jo["phi_min"] = cfg.rate.opt.phi_min;
  jo["phi_max"] = cfg.rate.opt.phi_max;
  jr["opt"] = jo;
  j["rate"] = jr;

  json jv;
  jv["suite"] = cfg.verify.suite;
  j["verify"] = jv;

  json js;
  js["n_paths"] = cfg.sim.n_paths;
  j["simulate"] = js;
  return j;
}

}  // namespace goyld
