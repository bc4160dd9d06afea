#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "goyld/presets.hpp"

using namespace goyld;

TEST_CASE("path metric: zero on itself, grid mismatch rejected") {
  presets::Case c = presets::scalar_gaussian_case();
  IntegratorConfig cfg = c.cfg;
  cfg.epsilon = 0.05;
  const Trajectory a = simulate(c.params, c.fam, c.marks, c.q, cfg, c.u0, 3);
  const PathMetric m = path_metric(a, a, c.params.grid);
  CHECK(m.sup_h == 0.0);
  CHECK(m.l2_v == 0.0);
  CHECK(m.combined == 0.0);

  IntegratorConfig other = cfg;
  other.record_stride = 2;
  const Trajectory b = simulate(c.params, c.fam, c.marks, c.q, other, c.u0, 3);
  CHECK_THROWS_AS(path_metric(a, b, c.params.grid), std::invalid_argument);
}

TEST_CASE("poisson tail oracle sanity") {
  // P(N >= 6) for N ~ Poisson(4)
  CHECK(presets::poisson_upper_tail(4.0, 6) == doctest::Approx(0.2148696).epsilon(1e-5));
  CHECK(presets::poisson_upper_tail(4.0, 0) == 1.0);
  // deep tail stays finite in log space
  CHECK(presets::log_poisson_upper_tail(400.0, 1100) < -300.0);
  CHECK(std::isfinite(presets::log_poisson_upper_tail(400.0, 1100)));
}

TEST_CASE("monotonicity check: regimes and zero violations") {
  ModelParams p;
  p.nu = 1.0;
  p.grid = ShellGrid::make(1.0, 16);
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(16, 1.0));
  const MarkSpace marks = MarkSpace::make({"z"}, {1.0});
  const std::vector<ShellState> amps = {basis_state(16, 0, cplx(0.3, 0.0))};

  const CoefficientFamily mul = CoefficientFamily::make(
      FamilyKind::diagonal_multiplicative, std::vector<double>(16, 1.0), amps, marks, q);
  // out of regime: eps >= nu / (2 L)
  CHECK_THROWS_AS(
      check_monotonicity(p, mul, marks, q, 1.0, p.nu / (2.0 * mul.lipschitz_L), 10, 1),
      std::invalid_argument);

  const MonotonicityReport rep = check_monotonicity(p, mul, marks, q, 1.0, 0.2, 500, 5);
  CHECK(rep.pass);
  CHECK(rep.violations == 0);

  // pure dissipation: B disabled, eps = 0 keeps the form nonpositive
  ModelParams p_lin = p;
  p_lin.b_enabled = false;
  const CoefficientFamily add = CoefficientFamily::make(
      FamilyKind::additive, std::vector<double>(16, 1.0), amps, marks, q);
  const MonotonicityReport rep2 = check_monotonicity(p_lin, add, marks, q, 1.0, 0.0, 300, 6);
  CHECK(rep2.pass);
  CHECK(rep2.max_ratio <= 0.0 + 1e-12);
}

TEST_CASE("rare-event estimate: non-rare threshold gives p close to 1") {
  presets::Case c = presets::scalar_gaussian_case();
  IntegratorConfig cfg = c.cfg;
  cfg.epsilon = 0.1;
  const EventSpec ev{1e-12};
  const RareEventEstimate est =
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 500, 11);
  CHECK(est.p_hat > 0.99);
  CHECK(est.censored == 0);
  CHECK_THROWS_AS(
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 50, 11),
      std::invalid_argument);
}

TEST_CASE("plain estimates match the exact scalar tails") {
  {
    presets::Case c = presets::scalar_jump_case();
    IntegratorConfig cfg = c.cfg;
    cfg.epsilon = 0.25;
    const double a_amp = 1.3;
    const EventSpec ev{a_amp * a_amp};
    const long k = static_cast<long>(std::ceil(a_amp / cfg.epsilon - 1e-9));
    const double exact = presets::poisson_upper_tail(1.0 / cfg.epsilon, k);
    const RareEventEstimate est =
        estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 4000, 21);
    CHECK(std::abs(est.p_hat - exact) <= 3.0 * est.se);
  }
  {
    presets::Case c = presets::scalar_gaussian_case();
    IntegratorConfig cfg = c.cfg;
    cfg.epsilon = 0.1;
    const double v1 = presets::scalar_gaussian_variance_unit(c);
    const double a = cfg.epsilon * v1 * std::log(5.0);  // P = 0.2
    const EventSpec ev{a};
    const double exact = std::exp(-a / (cfg.epsilon * v1));
    const RareEventEstimate est =
        estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 4000, 22);
    CHECK(std::abs(est.p_hat - exact) <= 3.0 * est.se);
  }
}

TEST_CASE("importance sampling agrees with plain MC on a non-rare event") {
  presets::Case c = presets::scalar_gaussian_case();
  IntegratorConfig cfg = c.cfg;
  cfg.epsilon = 0.1;
  const double v1 = presets::scalar_gaussian_variance_unit(c);
  const double a = cfg.epsilon * v1 * std::log(4.0);  // P = 0.25
  const EventSpec ev{a};
  const RareEventEstimate plain =
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 4000, 23);
  ControlPath tilt = ControlPath::null_control(3, 0);
  tilt.psi[0][0] = cplx(0.4, 0.0);
  const RareEventEstimate weighted = estimate_rare_event(
      ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 4000, 24, &tilt);
  CHECK(weighted.weighted);
  CHECK(weighted.excluded == 0);
  const double combined = 3.0 * std::sqrt(plain.se * plain.se + weighted.se * weighted.se);
  CHECK(std::abs(plain.p_hat - weighted.p_hat) <= combined);
}

TEST_CASE("jump importance sampling stays unbiased off the step grid") {
  // control nodes at thirds do not align with dt = 0.01; the likelihood
  // ratio must integrate the tilted clock on the control grid exactly
  presets::Case c = presets::scalar_jump_case();
  IntegratorConfig cfg = c.cfg;
  cfg.epsilon = 0.25;
  const EventSpec ev{1.3 * 1.3};
  const RareEventEstimate plain =
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 6000, 61);
  ControlPath tilt;
  tilt.time_grid = {0.0, 1.0 / 3.0, 2.0 / 3.0};
  tilt.psi = {zero_state(3), zero_state(3), zero_state(3)};
  tilt.phi = {{1.5}, {0.8}, {1.6}};
  const RareEventEstimate weighted = estimate_rare_event(
      ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 6000, 62, &tilt);
  const double combined = 3.0 * std::sqrt(plain.se * plain.se + weighted.se * weighted.se);
  CHECK(std::abs(plain.p_hat - weighted.p_hat) <= combined);
}

TEST_CASE("weak convergence of controlled paths to the skeleton (smoke)") {
  ModelParams p;
  p.nu = 1.0;
  p.grid = ShellGrid::make(1.0, 4);
  p.b_enabled = false;
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(4, 1.0));
  const MarkSpace marks = MarkSpace::make({"z"}, {1.0});
  const CoefficientFamily fam = CoefficientFamily::make(
      FamilyKind::additive, std::vector<double>(4, 1.0),
      {basis_state(4, 0, cplx(0.2, 0.0))}, marks, q);
  ControlPath ctrl = ControlPath::null_control(4, 1);
  ctrl.psi[0][0] = cplx(0.4, 0.0);
  ctrl.phi[0][0] = 1.3;
  IntegratorConfig base;
  base.dt = 0.005;
  base.T = 1.0;
  base.record_stride = 10;
  const ShellState u0 = basis_state(4, 0, cplx(0.5, 0.0));
  const WeakConvergenceReport rep = check_weak_convergence(
      p, fam, marks, q, ctrl, JumpDriftWeight::paper_literal, {1e-1, 1e-2, 1e-3}, 80,
      base, u0, 31);
  CHECK(rep.pass);
  CHECK(rep.medians.size() == 3);
  CHECK(rep.medians[1] < rep.medians[0]);
  CHECK(rep.medians[2] < rep.medians[1]);
  // O(eps) scaling: median ratio per decade stays near 0.1
  for (std::size_t i = 1; i < rep.medians.size(); ++i) {
    const double ratio = rep.medians[i] / rep.medians[i - 1];
    CHECK(ratio >= 0.03);
    CHECK(ratio <= 0.5);
  }
}

TEST_CASE("ensemble results do not depend on the worker count") {
  presets::Case c = presets::scalar_gaussian_case();
  IntegratorConfig cfg = c.cfg;
  cfg.epsilon = 0.1;
  const double v1 = presets::scalar_gaussian_variance_unit(c);
  const EventSpec ev{cfg.epsilon * v1 * std::log(5.0)};
  set_worker_threads(1);
  const RareEventEstimate serial =
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 1000, 97);
  set_worker_threads(4);
  const RareEventEstimate threaded =
      estimate_rare_event(ev, c.params, c.fam, c.marks, c.q, cfg, c.u0, 1000, 97);
  set_worker_threads(0);
  CHECK(serial.p_hat == threaded.p_hat);
  CHECK(serial.hits == threaded.hits);
  CHECK(serial.se == threaded.se);
}

TEST_CASE("skeleton continuity in the control is quadratic in the metric") {
  ModelParams p;
  p.nu = 1.0;
  p.grid = ShellGrid::make(1.0, 4);
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(4, 1.0));
  const MarkSpace marks = MarkSpace::make({"z"}, {1.0});
  const CoefficientFamily fam = CoefficientFamily::make(
      FamilyKind::additive, std::vector<double>(4, 1.0),
      {basis_state(4, 0, cplx(0.3, 0.0))}, marks, q);
  ControlPath ctrl = ControlPath::null_control(4, 1);
  ctrl.psi[0][0] = cplx(0.6, 0.0);
  ctrl.phi[0][0] = 1.5;
  IntegratorConfig cfg;
  cfg.dt = 0.005;
  cfg.T = 1.0;
  const ShellState u0 = basis_state(4, 0, cplx(0.4, 0.0));
  const ContinuityReport rep = check_skeleton_continuity(
      p, fam, marks, q, ctrl, JumpDriftWeight::paper_literal, {1e-1, 1e-2, 1e-3}, cfg, u0);
  CHECK(rep.pass);
  CHECK(rep.psi_slope == doctest::Approx(2.0).epsilon(0.25));
  CHECK(rep.phi_slope == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("decay check wiring on the jump case (smoke)") {
  presets::Case c = presets::scalar_jump_case();
  const double a_amp = std::exp(1.0);
  const EventSpec ev{a_amp * a_amp};
  ControlPath tilt = ControlPath::null_control(3, 1);
  tilt.phi[0][0] = a_amp;  // the optimal constant tilt
  const double cramer = ell(a_amp);
  const DecayReport rep =
      ldp_decay_check(ev, c.params, c.fam, c.marks, c.q, c.cfg, c.u0, {0.02, 0.01},
                      {1500, 1500}, 41, &tilt, cramer);
  CHECK(rep.usable_rungs == 2);
  CHECK(rep.extrapolated < 0.0);
  CHECK(std::abs(rep.extrapolated + cramer) <= 0.25 * cramer);
  CHECK(std::isfinite(rep.relative_gap));
}

TEST_CASE("censored paths feed the upper-bound convention") {
  RareEventEstimate est;
  est.n = 100;
  est.hits = 10;
  est.p_hat = 0.1;
  est.censored = 5;
  CHECK(est.p_upper() == doctest::Approx(0.15));
}
