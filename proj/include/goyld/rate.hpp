#pragma once
// Deterministic skeleton equation and numerical minimization of the control
// cost over piecewise-constant controls. Every finite output is an upper
// bound on the rate for the chosen target; infeasible queries report +inf.

#include <cstdint>
#include <limits>
#include <vector>

#include "goyld/sde.hpp"

namespace goyld {

// Noise-free controlled flow
//   du/dt = -nu A u - B(u,u) + f + sigma(t,u) psi(t) + sum_m g(u,z_m) w(phi) lambda_m
// integrated with the same semi-implicit scheme as the stochastic solver.
Trajectory solve_skeleton(const ModelParams& params, const CoefficientFamily& fam,
                          const MarkSpace& marks, const CovarianceQ& q,
                          const ControlPath& control, const IntegratorConfig& cfg,
                          JumpDriftWeight w, const ShellState& u0);

struct RateQuery {
  enum class Kind { terminal_state, terminal_energy_above };
  Kind kind = Kind::terminal_energy_above;
  ShellState target_state;       // used by terminal_state
  double target_energy = 0.0;    // threshold a: |u(T)|^2 >= a
  double match_tolerance = 1e-3;
  double budget = std::numeric_limits<double>::infinity();  // cap on L_T(phi)

  bool satisfied(const Trajectory& traj) const;
  double distance(const Trajectory& traj) const;  // 0 when satisfied exactly
};

// Cost of the given control if its skeleton run satisfies the query within
// tolerance (and respects the jump-cost budget); +inf otherwise.
double rate_upper_bound(const RateQuery& query, const ControlPath& control,
                        const ModelParams& params, const CoefficientFamily& fam,
                        const MarkSpace& marks, const CovarianceQ& q,
                        const IntegratorConfig& cfg, JumpDriftWeight w,
                        const ShellState& u0);

struct OptConfig {
  int ctrl_nodes = 8;
  int max_iters = 300;       // projected-gradient iterations per penalty stage
  int restarts = 2;          // random restarts in addition to deterministic inits
  double phi_min = 1e-6;     // keeps ell and its derivative finite
  double phi_max = 50.0;
  double beta0 = 10.0;       // penalty weight, doubled until the query is met
  double beta_max = 1e8;
  double fd_step = 1e-4;
  double init_step = 0.25;
  std::uint64_t seed = 0;
};

struct MinimizeResult {
  ControlPath best_control;
  double best_cost = std::numeric_limits<double>::infinity();
  CostBreakdown best_breakdown;
  bool feasible = false;
  std::vector<double> trace;  // accepted (incumbent) costs, nonincreasing
  long evals = 0;
};

// Discretize-then-optimize: projected gradient descent with finite-difference
// gradients on cost + beta * distance^2, phi boxed to [phi_min, phi_max],
// beta doubled until the tolerance is met. warm_start, when given, seeds one
// initialization (resampled onto the optimizer's control grid).
MinimizeResult minimize_rate(const RateQuery& query, const ModelParams& params,
                             const CoefficientFamily& fam, const MarkSpace& marks,
                             const CovarianceQ& q, const IntegratorConfig& cfg,
                             JumpDriftWeight w, const ShellState& u0,
                             const OptConfig& opt,
                             const ControlPath* warm_start = nullptr);

}  // namespace goyld
