#pragma once
// Numerical checks behind the large-deviation machinery: local monotonicity
// of the drift pair, energy bounds, convergence of controlled paths to the
// skeleton, skeleton continuity in the control, rare-event estimation with
// optional importance sampling, and the decay-rate consistency check.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "goyld/rate.hpp"

namespace goyld {

// Terminal rare event {|u(T)|^2 >= threshold}.
struct EventSpec {
  double energy_threshold = 0.0;
};
bool event_hit(const EventSpec& event, const Trajectory& traj);

struct PathMetric {
  double sup_h = 0.0;   // sup_t |x(t) - y(t)|^2
  double l2_v = 0.0;    // int ||x(t) - y(t)||^2 dt
  double combined = 0.0;
};
PathMetric path_metric(const Trajectory& a, const Trajectory& b, const ShellGrid& grid);

// --- local monotonicity -----------------------------------------------------

struct MonotonicityReport {
  int samples = 0;
  int violations = 0;
  double max_ratio = -std::numeric_limits<double>::infinity();  // max lhs/scale
  double r = 0.0;
  double epsilon = 0.0;
  bool pass = false;
};

// Samples u in V and v in the l4-ball of radius r and checks
//   (F(u)-F(v), w) - (r^4/nu^3)|w|^2
//     + eps (|sigma(u)-sigma(v)|_{L_Q}^2 + sum |g(u,.)-g(v,.)|^2 lambda) <= tol * scale.
// Requires eps < nu / (2 L) for the family's audited L (vacuous at L = 0).
MonotonicityReport check_monotonicity(const ModelParams& params, const CoefficientFamily& fam,
                                      const MarkSpace& marks, const CovarianceQ& q, double r,
                                      double epsilon, int samples, std::uint64_t seed,
                                      double tol = 1e-10);

// --- energy bounds -----------------------------------------------------------

struct EnergyCell {
  std::string family;
  double epsilon = 0.0;
  double rhs = 0.0;                 // explicit bound (1+eps K T e^{eps K T})(...)
  MeanSE endpoint_plus_dissipation; // E|u(T)|^2 + nu E int ||u||^2
  MeanSE sup_energy;                // E sup_t |u(t)|^2
  MeanSE dissipation;
  std::size_t censored = 0;
  bool pass = false;
};

struct EnergyBoundsReport {
  std::vector<EnergyCell> cells;
  // E sup |u|^p per epsilon (descending ladder) for each requested p
  std::vector<double> p_list;
  std::vector<std::vector<MeanSE>> p_moments;  // [p][epsilon index]
  bool p_moments_ok = false;
  bool pass = false;
};

EnergyBoundsReport check_energy_bounds(
    const ModelParams& params, const CovarianceQ& q, const MarkSpace& marks,
    const std::vector<std::pair<std::string, CoefficientFamily>>& families,
    const std::vector<double>& epsilons, const IntegratorConfig& base_cfg,
    const ShellState& u0, std::size_t n_paths, const std::vector<double>& p_list,
    std::uint64_t seed);

// --- weak convergence of controlled paths -------------------------------------

struct WeakConvergenceReport {
  std::vector<double> epsilons;
  std::vector<double> medians;
  std::vector<double> p95s;
  double final_over_first = 0.0;
  bool pass = false;
};

WeakConvergenceReport check_weak_convergence(const ModelParams& params,
                                             const CoefficientFamily& fam,
                                             const MarkSpace& marks, const CovarianceQ& q,
                                             const ControlPath& control, JumpDriftWeight w,
                                             const std::vector<double>& eps_ladder,
                                             std::size_t n_paths,
                                             const IntegratorConfig& base_cfg,
                                             const ShellState& u0, std::uint64_t seed,
                                             double ratio_max = 0.5,
                                             double final_frac = 0.05);

// --- skeleton continuity in the control ---------------------------------------

struct ContinuityReport {
  std::vector<double> deltas;
  std::vector<double> psi_metrics;
  std::vector<double> phi_metrics;
  double psi_slope = 0.0;  // log-log slope, ~2 for a quadratic metric
  double phi_slope = 0.0;
  bool pass = false;
};

ContinuityReport check_skeleton_continuity(const ModelParams& params,
                                           const CoefficientFamily& fam,
                                           const MarkSpace& marks, const CovarianceQ& q,
                                           const ControlPath& control, JumpDriftWeight w,
                                           const std::vector<double>& deltas,
                                           const IntegratorConfig& cfg,
                                           const ShellState& u0);

// --- rare events ---------------------------------------------------------------

struct RareEventEstimate {
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  double se = 0.0;
  std::size_t hits = 0;
  std::size_t censored = 0;
  std::size_t excluded = 0;  // weight overflow exclusions
  std::size_t n = 0;
  bool weighted = false;

  // censored paths counted toward the event (upper-bound convention)
  double p_upper() const {
    return n ? std::min(1.0, p_hat + static_cast<double>(censored) / n) : 0.0;
  }
};

// Plain Monte Carlo, or importance sampling when a control is supplied (the
// tilted dynamics run with the standard drift weight so the likelihood ratio
// is exact). raw_out, when given, receives the per-path indicator or weight.
RareEventEstimate estimate_rare_event(const EventSpec& event, const ModelParams& params,
                                      const CoefficientFamily& fam, const MarkSpace& marks,
                                      const CovarianceQ& q, const IntegratorConfig& cfg,
                                      const ShellState& u0, std::size_t n_paths,
                                      std::uint64_t seed,
                                      const ControlPath* importance_control = nullptr,
                                      std::vector<double>* raw_out = nullptr);

// --- decay-rate consistency ------------------------------------------------------

struct DecayRung {
  double epsilon = 0.0;
  RareEventEstimate est;
  double y = 0.0;     // eps * log p_hat
  double y_lo = 0.0;  // from the CI
  double y_hi = 0.0;
  bool usable = false;
};

struct DecayReport {
  std::vector<DecayRung> rungs;
  double extrapolated = 0.0;  // weighted LS fit of eps*log p at eps -> 0
  double smallest_raw = 0.0;  // raw value at the smallest usable rung
  double rate_bound = std::numeric_limits<double>::infinity();
  double relative_gap = std::numeric_limits<double>::quiet_NaN();
  int usable_rungs = 0;
};

DecayReport ldp_decay_check(const EventSpec& event, const ModelParams& params,
                            const CoefficientFamily& fam, const MarkSpace& marks,
                            const CovarianceQ& q, const IntegratorConfig& base_cfg,
                            const ShellState& u0, const std::vector<double>& eps_ladder,
                            const std::vector<std::size_t>& n_paths_schedule,
                            std::uint64_t seed, const ControlPath* importance_control,
                            double rate_bound);

}  // namespace goyld
