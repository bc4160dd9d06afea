#include "goyld/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "goyld/presets.hpp"
#include "goyld/version.hpp"

namespace goyld {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class OutputWriter {
 public:
  explicit OutputWriter(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
    files_.emplace_back(name, sha256_hex(content));
  }

  json manifest(const RunConfig& cfg, double wall_seconds) const {
    json m;
    m["config_digest"] = cfg.digest();
    m["tool_version"] = kToolVersion;
    m["experiment"] = cfg.experiment;
    m["jump_drift_weight"] = to_string(cfg.jump_weight);
    m["seed"] = cfg.seed;
    m["wall_time_seconds"] = wall_seconds;
    auto sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    json files = json::array();
    for (const auto& [name, sha] : sorted) {
      files.push_back(json{{"path", name}, {"sha256", sha}});
    }
    m["files"] = files;
    return m;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string trajectory_csv(const Trajectory& tr, int n_shells) {
  std::ostringstream out;
  out << "t";
  for (int j = 1; j <= n_shells; ++j) out << ",re_u" << j << ",im_u" << j;
  out << ",energy,enstrophy,dissipation_integral\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    out << format_double(tr.times[i]);
    for (int j = 0; j < n_shells; ++j) {
      out << ',' << format_double(tr.states[i][j].real()) << ','
          << format_double(tr.states[i][j].imag());
    }
    out << ',' << format_double(tr.energy[i]) << ',' << format_double(tr.enstrophy[i])
        << ',' << format_double(tr.dissipation[i]) << '\n';
  }
  return out.str();
}

std::string jumps_csv(const JumpLog& log) {
  std::ostringstream out;
  out << "t,mark\n";
  for (const auto& [t, m] : log.events) {
    out << format_double(t) << ',' << m << '\n';
  }
  return out.str();
}

json mean_se_json(const MeanSE& m) {
  return json{{"mean", m.mean}, {"se", m.se}, {"n", m.n}};
}

struct SuiteResult {
  std::string name;
  bool pass = false;
  json metrics;
  std::string samples_csv;
};

// --- verify suites -----------------------------------------------------------

SuiteResult suite_operators(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "operators";
  const std::uint64_t seed = cfg.seed;
  std::ostringstream csv;
  csv << "sample,energy_orth_ratio,general_orth_ratio,decomposition_rel\n";

  const ShellGrid grid32 = ShellGrid::make(1.0, 32);
  ModelParams p32;
  p32.grid = grid32;
  RngStream rng = RngStream::derive(seed, 20, 0);
  double max_orth_uu = 0.0, max_orth_uv = 0.0, max_dec = 0.0;
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    const ShellState u = gaussian_state(32, rng);
    const ShellState v = gaussian_state(32, rng);
    const double orth_uu =
        std::abs(h_inner(apply_B(u, u, grid32), u)) / (v_norm(u, grid32) * h_norm2(u));
    const double orth_uv =
        std::abs(h_inner(apply_B(u, v, grid32), v)) / (v_norm(u, grid32) * h_norm2(v));
    const ShellState w = sub(u, v);
    ShellState lhs = sub(apply_B(u, u, grid32), apply_B(v, v, grid32));
    ShellState rhs = apply_B(v, w, grid32);
    axpy(rhs, 1.0, apply_B(w, v, grid32));
    axpy(rhs, 1.0, apply_B(w, w, grid32));
    const double dec = h_norm(sub(lhs, rhs)) /
                       (h_norm(apply_B(u, u, grid32)) + h_norm(apply_B(v, v, grid32)) + 1e-300);
    max_orth_uu = std::max(max_orth_uu, orth_uu);
    max_orth_uv = std::max(max_orth_uv, orth_uv);
    max_dec = std::max(max_dec, dec);
    csv << s << ',' << format_double(orth_uu) << ',' << format_double(orth_uv) << ','
        << format_double(dec) << '\n';
  }

  const ShellGrid grid16 = ShellGrid::make(1.0, 16);
  const OperatorBoundReport rep1 = measure_operator_bounds(grid16, 4000, seed);
  const OperatorBoundReport rep2 = measure_operator_bounds(grid16, 8000, seed);
  auto rel = [](double a, double b) { return std::abs(b - a) / std::max(1e-300, a); };
  const double dc1 = rel(rep1.c1, rep2.c1), dc2 = rel(rep1.c2, rep2.c2);
  const double dc3 = rel(rep1.c3, rep2.c3), dc4 = rel(rep1.c4, rep2.c4);
  const double l4max = max_l4_interpolation_ratio(grid16, 4000, seed);

  res.metrics = json{{"max_energy_orth_ratio", max_orth_uu},
                     {"max_general_orth_ratio", max_orth_uv},
                     {"max_decomposition_rel", max_dec},
                     {"bounds", json{{"c1", rep1.c1}, {"c2", rep1.c2}, {"c3", rep1.c3},
                                     {"c4", rep1.c4}}},
                     {"bounds_doubling_rel",
                      json{{"c1", dc1}, {"c2", dc2}, {"c3", dc3}, {"c4", dc4}}},
                     {"l4_interpolation_max", l4max}};
  res.pass = max_orth_uu <= 1e-12 && max_orth_uv <= 1e-12 && max_dec <= 1e-12 &&
             dc1 <= 0.10 && dc2 <= 0.10 && dc3 <= 0.10 && dc4 <= 0.10 &&
             l4max <= 1.0 + 1e-12;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult suite_noise(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "noise";
  const std::uint64_t seed = cfg.seed;
  const int n = cfg.model.grid.n_shells;
  const CoefficientFamily fam = cfg.family();
  std::ostringstream csv;
  csv << "check,sample,value\n";

  const HypothesisAudit audit = audit_hypotheses(fam, cfg.marks, cfg.q, n, 1000, seed);

  // law of the Wiener increments: mean |dW_n|^2 / dt within 3 SE of q_n
  bool wiener_ok = true;
  const int m_draws = 20000;
  const double dt = 0.01;
  {
    RngStream rng = RngStream::derive(seed, 21, 0);
    std::vector<double> acc(n, 0.0);
    for (int i = 0; i < m_draws; ++i) {
      const ShellState inc = sample_wiener_increment(dt, cfg.q, rng);
      for (int j = 0; j < n; ++j) acc[j] += std::norm(inc[j]) / dt;
    }
    for (int j = 0; j < n; ++j) {
      const double mean = acc[j] / m_draws;
      const double se = cfg.q.q[j] / std::sqrt(static_cast<double>(m_draws));
      csv << "wiener_mean," << j << ',' << format_double(mean) << '\n';
      if (std::abs(mean - cfg.q.q[j]) > 3.0 * se + 1e-12) wiener_ok = false;
    }
  }

  // bitwise determinism of streams
  bool determinism_ok = true;
  {
    RngStream a = RngStream::derive(seed, 22, 0);
    RngStream b = RngStream::derive(seed, 22, 0);
    for (int i = 0; i < 1000; ++i) {
      if (a.next_u64() != b.next_u64()) determinism_ok = false;
    }
    if (cfg.marks.size() > 0) {
      RngStream j1 = RngStream::derive(seed, 23, 0);
      RngStream j2 = RngStream::derive(seed, 23, 0);
      const JumpLog l1 = sample_jump_times(1.0, cfg.marks, 10.0, nullptr, j1);
      const JumpLog l2 = sample_jump_times(1.0, cfg.marks, 10.0, nullptr, j2);
      determinism_ok = determinism_ok && l1.events == l2.events;
    }
  }

  // compensated jump integral has mean zero (additive kicks, fixed state)
  bool martingale_ok = true;
  double mart_mean = 0.0, mart_se = 0.0;
  if (cfg.marks.size() > 0) {
    const double eps = 0.5, T = 1.0;
    ShellState drift = zero_state(n);
    for (int m = 0; m < cfg.marks.size(); ++m) {
      axpy(drift, cfg.marks.weights[m], cfg.jump_amps[m]);
    }
    const double dn = h_norm(drift);
    ShellState dir = dn > 0 ? scaled(drift, 1.0 / dn) : basis_state(n, 0);
    const int runs = 10000;
    std::vector<double> vals(runs);
    for (int i = 0; i < runs; ++i) {
      RngStream rng = RngStream::derive(seed, 24, i);
      const JumpLog log = sample_jump_times(T, cfg.marks, 1.0 / eps, nullptr, rng);
      ShellState value = scaled(drift, -T);
      for (const auto& [t, m] : log.events) axpy(value, eps, cfg.jump_amps[m]);
      vals[i] = h_inner(value, dir);
    }
    const MeanSE ms = mean_se(vals);
    mart_mean = ms.mean;
    mart_se = ms.se;
    martingale_ok = std::abs(ms.mean) <= 3.0 * ms.se + 1e-12;
  }

  // thinning against a two-level intensity: window counts match Poisson moments
  bool thinning_ok = true;
  json thinning;
  {
    MarkSpace marks = cfg.marks.size() > 0 ? cfg.marks : MarkSpace::make({"z1"}, {2.0});
    PiecewisePhi phi;
    phi.times = {0.0, 0.5};
    phi.values = {std::vector<double>(marks.size(), 0.5),
                  std::vector<double>(marks.size(), 2.0)};
    const double mass = marks.total_mass();
    const double mean1 = 0.5 * 0.5 * mass, mean2 = 2.0 * 0.5 * mass;
    const int runs = 4000;
    std::vector<double> c1(runs, 0.0), c2(runs, 0.0);
    for (int i = 0; i < runs; ++i) {
      RngStream rng = RngStream::derive(seed, 25, i);
      const JumpLog log = sample_jump_times(1.0, marks, 1.0, &phi, rng);
      for (const auto& [t, m] : log.events) {
        (t < 0.5 ? c1[i] : c2[i]) += 1.0;
      }
    }
    const MeanSE m1 = mean_se(c1), m2 = mean_se(c2);
    auto variance = [](const std::vector<double>& v, double mean) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return ss / (v.size() - 1.0);
    };
    const double v1 = variance(c1, m1.mean), v2 = variance(c2, m2.mean);
    thinning = json{{"window1_mean", m1.mean}, {"window1_expected", mean1},
                    {"window2_mean", m2.mean}, {"window2_expected", mean2},
                    {"window1_var", v1},       {"window2_var", v2}};
    thinning_ok = std::abs(m1.mean - mean1) <= 3.0 * m1.se &&
                  std::abs(m2.mean - mean2) <= 3.0 * m2.se &&
                  std::abs(v1 - mean1) <= 6.0 * mean1 / std::sqrt(static_cast<double>(runs)) +
                                              0.05 * mean1 &&
                  std::abs(v2 - mean2) <= 6.0 * mean2 / std::sqrt(static_cast<double>(runs)) +
                                              0.05 * mean2;
  }

  res.metrics = json{{"audit", json{{"K_hat", audit.K_hat},
                                    {"L_hat", audit.L_hat},
                                    {"K", fam.growth_K},
                                    {"L", fam.lipschitz_L},
                                    {"pass", audit.pass}}},
                     {"wiener_law_ok", wiener_ok},
                     {"determinism_ok", determinism_ok},
                     {"martingale_mean", mart_mean},
                     {"martingale_se", mart_se},
                     {"martingale_ok", martingale_ok},
                     {"thinning", thinning},
                     {"thinning_ok", thinning_ok}};
  res.pass = audit.pass && wiener_ok && determinism_ok && martingale_ok && thinning_ok;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult suite_energy(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "energy";
  const int n = cfg.model.grid.n_shells;

  MarkSpace marks = cfg.marks;
  std::vector<ShellState> amps = cfg.jump_amps;
  if (marks.size() == 0) {
    marks = MarkSpace::make({"z1"}, {1.0});
    amps = {basis_state(n, 0, cplx(0.25, 0.0))};
  }
  const std::vector<double> s(n, 0.5);
  std::vector<std::pair<std::string, CoefficientFamily>> families;
  families.emplace_back("additive",
                        CoefficientFamily::make(FamilyKind::additive, s, amps, marks, cfg.q));
  families.emplace_back("saturated",
                        CoefficientFamily::make(FamilyKind::saturated_multiplicative, s, amps,
                                                marks, cfg.q));

  IntegratorConfig base = cfg.integrator;
  const EnergyBoundsReport rep =
      check_energy_bounds(cfg.model, cfg.q, marks, families, {0.1, 0.01}, base,
                          cfg.initial_state, 1000, {4.0}, cfg.seed);

  std::ostringstream csv;
  csv << "family,epsilon,rhs,endpoint_plus_dissipation,sup_energy,pass\n";
  json cells = json::array();
  for (const EnergyCell& c : rep.cells) {
    csv << c.family << ',' << format_double(c.epsilon) << ',' << format_double(c.rhs) << ','
        << format_double(c.endpoint_plus_dissipation.mean) << ','
        << format_double(c.sup_energy.mean) << ',' << (c.pass ? 1 : 0) << '\n';
    cells.push_back(json{{"family", c.family},
                         {"epsilon", c.epsilon},
                         {"rhs", c.rhs},
                         {"endpoint_plus_dissipation", mean_se_json(c.endpoint_plus_dissipation)},
                         {"sup_energy", mean_se_json(c.sup_energy)},
                         {"dissipation", mean_se_json(c.dissipation)},
                         {"censored", c.censored},
                         {"pass", c.pass}});
  }
  res.metrics = json{{"cells", cells}, {"p_moments_ok", rep.p_moments_ok}};
  res.pass = rep.pass;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult suite_monotonicity(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "monotonicity";
  ModelParams params;
  params.nu = 1.0;
  params.grid = ShellGrid::make(1.0, 16);
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(16, 1.0));
  const MarkSpace marks = MarkSpace::make({"z1"}, {1.0});
  const std::vector<ShellState> amps = {basis_state(16, 0, cplx(0.3, 0.0))};
  const std::vector<double> s(16, 1.0);

  std::ostringstream csv;
  csv << "family,violations,max_ratio\n";
  json rows = json::array();
  bool all_pass = true;
  const struct {
    const char* name;
    FamilyKind kind;
  } fams[] = {{"additive", FamilyKind::additive},
              {"diagonal_multiplicative", FamilyKind::diagonal_multiplicative},
              {"saturated_multiplicative", FamilyKind::saturated_multiplicative}};
  for (const auto& f : fams) {
    const CoefficientFamily fam = CoefficientFamily::make(f.kind, s, amps, marks, q);
    const double eps = fam.lipschitz_L > 0.0
                           ? std::min(0.2, 0.5 * params.nu / (2.0 * fam.lipschitz_L))
                           : 0.2;
    const MonotonicityReport rep =
        check_monotonicity(params, fam, marks, q, 1.0, eps, 1000, cfg.seed, 1e-10);
    csv << f.name << ',' << rep.violations << ',' << format_double(rep.max_ratio) << '\n';
    rows.push_back(json{{"family", f.name},
                        {"epsilon", rep.epsilon},
                        {"violations", rep.violations},
                        {"max_ratio", rep.max_ratio},
                        {"pass", rep.pass}});
    all_pass = all_pass && rep.pass;
  }
  res.metrics = json{{"families", rows}};
  res.pass = all_pass;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult suite_weak_convergence(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "weak-convergence";
  // linear additive sub-case: B off, additive sigma and jumps
  ModelParams params;
  params.nu = 1.0;
  params.grid = ShellGrid::make(1.0, 8);
  params.b_enabled = false;
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(8, 1.0));
  const MarkSpace marks = MarkSpace::make({"z1"}, {1.0});
  const CoefficientFamily fam =
      CoefficientFamily::make(FamilyKind::additive, std::vector<double>(8, 1.0),
                              {basis_state(8, 0, cplx(0.2, 0.0))}, marks, q);
  ControlPath ctrl = ControlPath::null_control(8, 1);
  ctrl.psi[0][0] = cplx(0.4, 0.0);
  ctrl.psi[0][1] = cplx(0.3, 0.0);
  ctrl.phi[0][0] = 1.3;
  const ShellState u0 = basis_state(8, 0, cplx(0.5, 0.0));

  IntegratorConfig base;
  base.dt = 1e-3;
  base.T = 1.0;
  base.record_stride = 10;

  const WeakConvergenceReport wc =
      check_weak_convergence(params, fam, marks, q, ctrl, cfg.jump_weight,
                             {1e-1, 1e-2, 1e-3}, 200, base, u0, cfg.seed);

  const ContinuityReport cont = check_skeleton_continuity(
      params, fam, marks, q, ctrl, cfg.jump_weight, {1e-1, 1e-2, 1e-3}, base, u0);

  std::ostringstream csv;
  csv << "epsilon,median,p95\n";
  for (std::size_t i = 0; i < wc.epsilons.size(); ++i) {
    csv << format_double(wc.epsilons[i]) << ',' << format_double(wc.medians[i]) << ','
        << format_double(wc.p95s[i]) << '\n';
  }
  res.metrics = json{{"epsilons", wc.epsilons},
                     {"medians", wc.medians},
                     {"p95s", wc.p95s},
                     {"final_over_first", wc.final_over_first},
                     {"weak_convergence_pass", wc.pass},
                     {"continuity",
                      json{{"deltas", cont.deltas},
                           {"psi_metrics", cont.psi_metrics},
                           {"phi_metrics", cont.phi_metrics},
                           {"psi_slope", cont.psi_slope},
                           {"phi_slope", cont.phi_slope},
                           {"pass", cont.pass}}}};
  res.pass = wc.pass && cont.pass;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult suite_ldp(const RunConfig& cfg) {
  SuiteResult res;
  res.name = "ldp";
  const std::uint64_t seed = cfg.seed;
  std::ostringstream csv;
  csv << "check,rep_or_rung,p_hat,oracle_or_y\n";

  // scalar oracles, 20 seeded repetitions each, hit within 3 SE at least 19x
  int jump_ok = 0, gauss_ok = 0;
  const int reps = 20;
  {
    presets::Case c = presets::scalar_jump_case();
    const double eps = 0.25;
    const double a_amp = 1.3;
    const EventSpec ev{a_amp * a_amp};
    IntegratorConfig cfg_eps = c.cfg;
    cfg_eps.epsilon = eps;
    const long k = static_cast<long>(std::ceil(a_amp / eps - 1e-9));
    const double exact = presets::poisson_upper_tail(1.0 / eps, k);
    for (int r = 0; r < reps; ++r) {
      const RareEventEstimate est =
          estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg_eps, c.u0, 2000,
                              sub_seed(seed, 300 + r));
      const double se = std::max(est.se, 1e-12);
      if (std::abs(est.p_hat - exact) <= 3.0 * se) ++jump_ok;
      csv << "jump_oracle," << r << ',' << format_double(est.p_hat) << ','
          << format_double(exact) << '\n';
    }
  }
  {
    presets::Case c = presets::scalar_gaussian_case();
    const double eps = 0.1;
    const double v1 = presets::scalar_gaussian_variance_unit(c);
    const double a = eps * v1 * std::log(10.0);  // P = 0.1
    const EventSpec ev{a};
    IntegratorConfig cfg_eps = c.cfg;
    cfg_eps.epsilon = eps;
    const double exact = std::exp(-a / (eps * v1));
    for (int r = 0; r < reps; ++r) {
      const RareEventEstimate est =
          estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg_eps, c.u0, 2000,
                              sub_seed(seed, 400 + r));
      const double se = std::max(est.se, 1e-12);
      if (std::abs(est.p_hat - exact) <= 3.0 * se) ++gauss_ok;
      csv << "gauss_oracle," << r << ',' << format_double(est.p_hat) << ','
          << format_double(exact) << '\n';
    }
  }

  // decay consistency on both scalar cases, importance sampling from the
  // minimizer's control
  json decay = json::array();
  bool decay_ok = true;
  {
    presets::Case c = presets::scalar_jump_case();
    const double a_amp = std::exp(1.0);  // optimal tilt phi* = e, rate = lambda T
    RateQuery query;
    query.kind = RateQuery::Kind::terminal_energy_above;
    query.target_energy = a_amp * a_amp;
    query.match_tolerance = 1e-4;
    OptConfig opt;
    opt.ctrl_nodes = 4;
    opt.max_iters = 200;
    opt.restarts = 1;
    opt.seed = seed;
    const MinimizeResult mr =
        minimize_rate(query, c.params, c.fam, c.marks, c.q, c.cfg,
                      JumpDriftWeight::standard, c.u0, opt);
    const double cramer = 1.0 * c.cfg.T * ell(a_amp / (1.0 * c.cfg.T));
    const EventSpec ev{a_amp * a_amp};
    const DecayReport rep = ldp_decay_check(
        ev, c.params, c.fam, c.marks, c.q, c.cfg, c.u0, {0.02, 0.01, 0.005, 0.0025},
        {2000, 2000, 2000, 2000}, sub_seed(seed, 500),
        mr.feasible ? &mr.best_control : nullptr, mr.best_cost);
    const bool slope_ok = std::abs(rep.extrapolated + cramer) <= 0.10 * cramer;
    const bool min_ok = mr.feasible && std::abs(mr.best_cost - cramer) <= 0.05 * cramer;
    decay_ok = decay_ok && slope_ok && min_ok;
    for (const auto& r : rep.rungs) {
      csv << "jump_decay," << format_double(r.epsilon) << ',' << format_double(r.est.p_hat)
          << ',' << format_double(r.y) << '\n';
    }
    decay.push_back(json{{"case", "jump"},
                         {"extrapolated", rep.extrapolated},
                         {"cramer", cramer},
                         {"best_cost", mr.best_cost},
                         {"slope_ok", slope_ok},
                         {"minimizer_ok", min_ok}});
  }
  {
    presets::Case c = presets::scalar_gaussian_case();
    const double v1 = presets::scalar_gaussian_variance_unit(c);
    const double a = 0.1 * v1 * std::log(100.0);  // P ~ 1e-2 at eps = 0.1
    RateQuery query;
    query.kind = RateQuery::Kind::terminal_energy_above;
    query.target_energy = a;
    query.match_tolerance = 1e-6;
    OptConfig opt;
    opt.ctrl_nodes = 4;
    opt.max_iters = 400;
    opt.restarts = 1;
    opt.seed = seed;
    const MinimizeResult mr =
        minimize_rate(query, c.params, c.fam, c.marks, c.q, c.cfg,
                      JumpDriftWeight::standard, c.u0, opt);
    const double oracle_rate = a / v1;
    const EventSpec ev{a};
    const DecayReport rep = ldp_decay_check(
        ev, c.params, c.fam, c.marks, c.q, c.cfg, c.u0, {0.1, 0.05, 0.025},
        {3000, 3000, 3000}, sub_seed(seed, 600), mr.feasible ? &mr.best_control : nullptr,
        mr.best_cost);
    const bool slope_ok = std::abs(rep.extrapolated + oracle_rate) <= 0.10 * oracle_rate;
    decay_ok = decay_ok && slope_ok;
    for (const auto& r : rep.rungs) {
      csv << "gauss_decay," << format_double(r.epsilon) << ',' << format_double(r.est.p_hat)
          << ',' << format_double(r.y) << '\n';
    }
    decay.push_back(json{{"case", "gaussian"},
                         {"extrapolated", rep.extrapolated},
                         {"oracle_rate", oracle_rate},
                         {"best_cost", mr.best_cost},
                         {"slope_ok", slope_ok}});
  }

  res.metrics = json{{"jump_oracle_pass_count", jump_ok},
                     {"gauss_oracle_pass_count", gauss_ok},
                     {"decay", decay}};
  res.pass = jump_ok >= 19 && gauss_ok >= 19 && decay_ok;
  res.samples_csv = csv.str();
  return res;
}

SuiteResult dispatch_suite(const RunConfig& cfg) {
  if (cfg.verify.suite == "operators") return suite_operators(cfg);
  if (cfg.verify.suite == "noise") return suite_noise(cfg);
  if (cfg.verify.suite == "energy") return suite_energy(cfg);
  if (cfg.verify.suite == "monotonicity") return suite_monotonicity(cfg);
  if (cfg.verify.suite == "weak-convergence") return suite_weak_convergence(cfg);
  return suite_ldp(cfg);
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  OutputWriter out(cfg.output_dir);
  RunOutcome outcome;

  json result;
  result["experiment"] = cfg.experiment;
  result["seed"] = cfg.seed;
  result["epsilon"] = cfg.epsilon;
  result["jump_drift_weight"] = to_string(cfg.jump_weight);
  result["config_digest"] = cfg.digest();
  result["tool_version"] = kToolVersion;

  if (cfg.experiment == "simulate" || cfg.experiment == "skeleton") {
    const CoefficientFamily fam = cfg.family();
    std::vector<Trajectory> ensemble;
    if (cfg.experiment == "simulate") {
      const std::size_t n_paths = static_cast<std::size_t>(cfg.sim.n_paths);
      ensemble.resize(n_paths);
      parallel_for(n_paths, [&](std::size_t i) {
        if (cfg.control) {
          ensemble[i] = simulate_controlled(cfg.model, fam, cfg.marks, cfg.q,
                                            cfg.integrator, *cfg.control, cfg.jump_weight,
                                            cfg.initial_state, cfg.seed, i);
        } else {
          ensemble[i] = simulate(cfg.model, fam, cfg.marks, cfg.q, cfg.integrator,
                                 cfg.initial_state, cfg.seed, i);
        }
      });
    } else {
      const ControlPath ctrl = cfg.control
                                   ? *cfg.control
                                   : ControlPath::null_control(cfg.model.grid.n_shells,
                                                               cfg.marks.size());
      ensemble.push_back(solve_skeleton(cfg.model, fam, cfg.marks, cfg.q, ctrl,
                                        cfg.integrator, cfg.jump_weight,
                                        cfg.initial_state));
    }
    const Trajectory& first = ensemble.front();
    out.write("trajectory.csv", trajectory_csv(first, cfg.model.grid.n_shells));
    out.write("jumps.csv", jumps_csv(first.jumps));
    std::size_t censored = 0;
    for (const auto& tr : ensemble) {
      if (tr.censored) ++censored;
    }
    result["n_paths"] = ensemble.size();
    result["censored_paths"] = censored;
    result["final_energy"] = first.final_energy();
    result["final_time"] = first.times.back();
    result["jump_count"] = first.jumps.size();
    if (ensemble.size() > 1) {
      const EnergyStats st = energy_statistics(ensemble, {4.0});
      result["energy_stats"] = json{{"sup_energy", mean_se_json(st.sup_energy)},
                                    {"dissipation", mean_se_json(st.dissipation)}};
    }
    if (censored == ensemble.size()) outcome.exit_code = 3;
    if (ensemble.size() == 1 && first.censored) {
      result["blowup_step"] = first.blowup_step;
      outcome.exit_code = 3;
    }
  } else if (cfg.experiment == "rate") {
    const CoefficientFamily fam = cfg.family();
    const MinimizeResult mr =
        minimize_rate(cfg.rate.query, cfg.model, fam, cfg.marks, cfg.q, cfg.integrator,
                      cfg.jump_weight, cfg.initial_state, cfg.rate.opt,
                      cfg.control ? &*cfg.control : nullptr);
    out.write("best_control.json", control_path_to_json(mr.best_control).dump(2) + "\n");
    result["feasible"] = mr.feasible;
    result["best_cost"] = mr.feasible ? json(mr.best_cost) : json("inf");
    result["cost_breakdown"] = json{{"jump_cost", mr.best_breakdown.jump_cost},
                                    {"gaussian_cost", mr.best_breakdown.gaussian_cost},
                                    {"total", mr.best_breakdown.total}};
    result["trace"] = mr.trace;
    result["evals"] = mr.evals;
  } else if (cfg.experiment == "verify") {
    const SuiteResult suite = dispatch_suite(cfg);
    json rep;
    rep["check_name"] = suite.name;
    rep["config_digest"] = cfg.digest();
    rep["seed"] = cfg.seed;
    rep["jump_drift_weight"] = to_string(cfg.jump_weight);
    rep["metrics"] = suite.metrics;
    rep["verdict"] = suite.pass ? "pass" : "fail";
    out.write("verify_" + suite.name + ".json", rep.dump(2) + "\n");
    out.write(suite.name + "_samples.csv", suite.samples_csv);
    result["suite"] = suite.name;
    result["verdict"] = suite.pass ? "pass" : "fail";
    if (!suite.pass) outcome.exit_code = 4;
  }

  out.write("result.json", result.dump(2) + "\n");
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  outcome.manifest = out.manifest(cfg, wall);
  {
    std::ofstream mf(out.dir() / "manifest.json", std::ios::binary);
    mf << outcome.manifest.dump(2) << "\n";
  }
  return outcome;
}

int merge_reports(const std::string& dir, const std::string& out_path) {
  if (!fs::exists(dir)) {
    throw ConfigError("config: report merge directory does not exist: " + dir);
  }
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json") {
      manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());
  std::ostringstream csv;
  csv << "directory,experiment,config_digest,tool_version,wall_time_seconds,n_files\n";
  for (const auto& p : manifests) {
    std::ifstream in(p);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::parse_error&) {
      continue;
    }
    csv << p.parent_path().string() << ',' << m.value("experiment", "") << ','
        << m.value("config_digest", "") << ',' << m.value("tool_version", "") << ','
        << format_double(m.value("wall_time_seconds", 0.0)) << ','
        << (m.contains("files") ? m["files"].size() : 0) << '\n';
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("config: cannot write " + out_path);
  out << csv.str();
  return 0;
}

}  // namespace goyld
