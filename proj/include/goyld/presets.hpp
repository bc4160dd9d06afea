#pragma once
// Pinned desk-scale cases and exact tail oracles shared by the verification
// suites and the acceptance runner.

#include <cmath>

#include "goyld/ldp.hpp"

namespace goyld::presets {

struct Case {
  ModelParams params;
  CovarianceQ q = CovarianceQ::make({1.0});
  MarkSpace marks;
  CoefficientFamily fam;
  ShellState u0;
  IntegratorConfig cfg;  // epsilon filled in per use
};

// Pure-jump scalar case: B and sigma off, one mark with a unit kick on shell
// 1, negligible viscosity. With u0 = lambda T the compensator drift cancels
// and u_1(T) = eps * N(T) with N ~ Poisson(lambda T / eps).
inline Case scalar_jump_case(double lambda = 1.0, double T = 1.0, double dt = 0.01) {
  Case c;
  c.params.nu = 1e-12;
  c.params.grid = ShellGrid::make(1.0, 3);
  c.params.b_enabled = false;
  c.q = CovarianceQ::make({1.0, 0.0, 0.0});
  c.marks = MarkSpace::make({"z1"}, {lambda});
  c.fam = CoefficientFamily::make(FamilyKind::additive, {0.0, 0.0, 0.0},
                                  {basis_state(3, 0)}, c.marks, c.q);
  c.u0 = basis_state(3, 0, cplx(lambda * T, 0.0));
  c.cfg.dt = dt;
  c.cfg.T = T;
  return c;
}

// Gaussian scalar case: B and jumps off, additive unit-scale noise on shell 1;
// nu = 1 and k0 = 0.5 give relaxation rate gamma = nu k_1^2 = 1.
inline Case scalar_gaussian_case(double T = 1.0, double dt = 0.01) {
  Case c;
  c.params.nu = 1.0;
  c.params.grid = ShellGrid::make(0.5, 3);
  c.params.b_enabled = false;
  c.q = CovarianceQ::make({1.0, 0.0, 0.0});
  c.marks = MarkSpace::make({}, {});
  c.fam = CoefficientFamily::make(FamilyKind::additive, {1.0, 0.0, 0.0}, {}, c.marks, c.q);
  c.u0 = zero_state(3);
  c.cfg.dt = dt;
  c.cfg.T = T;
  return c;
}

// Exact per-unit-epsilon variance of u_1(T) under the semi-implicit scheme
// for the Gaussian scalar case; |u_1(T)|^2 is then exponential with mean
// eps * this value, so P(|u_1(T)|^2 >= a) = exp(-a / (eps v)).
inline double scalar_gaussian_variance_unit(const Case& c) {
  const double gamma = c.params.nu * c.params.grid.k[0] * c.params.grid.k[0];
  const double rho = 1.0 / (1.0 + gamma * c.cfg.dt);
  const double s = c.fam.sigma_scale[0];
  double v = 0.0;
  for (long j = 0; j < c.cfg.n_steps(); ++j) {
    v = rho * rho * (v + s * s * c.q.q[0] * c.cfg.dt);
  }
  return v;
}

// Small full model: N = 8 shells with additive Gaussian noise on every shell
// and one additive jump mark on shell 1.
inline Case small_goy_case(double T = 1.0, double dt = 0.005) {
  Case c;
  c.params.nu = 0.5;
  c.params.grid = ShellGrid::make(1.0, 8);
  c.q = CovarianceQ::make(std::vector<double>(8, 1.0));
  c.marks = MarkSpace::make({"z1"}, {1.0});
  c.fam = CoefficientFamily::make(FamilyKind::additive, std::vector<double>(8, 0.7),
                                  {basis_state(8, 0, cplx(0.3, 0.0))}, c.marks, c.q);
  c.u0 = basis_state(8, 0, cplx(0.5, 0.0));
  c.cfg.dt = dt;
  c.cfg.T = T;
  return c;
}

// --- exact tail oracles -------------------------------------------------------

// log P(N >= k) for N ~ Poisson(m)
inline double log_poisson_upper_tail(double m, long k) {
  if (k <= 0) return 0.0;
  const double lt = k * std::log(m) - m - std::lgamma(static_cast<double>(k) + 1.0);
  double s = 1.0, term = 1.0;
  for (long j = k; j < k + 100000000; ++j) {
    term *= m / (static_cast<double>(j) + 1.0);
    s += term;
    if (term < 1e-18 * s) break;
  }
  return lt + std::log(s);
}

inline double poisson_upper_tail(double m, long k) {
  return std::exp(log_poisson_upper_tail(m, k));
}

}  // namespace goyld::presets
