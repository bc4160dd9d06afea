#pragma once
// Semi-implicit Euler-Maruyama integration of the stochastic shell model
// with small Gaussian and compensated-Poisson forcing, and of its controlled
// variant. The viscous term is implicit (diagonal solve); B, forcing, noise
// and jumps are explicit at the left endpoint.
//
// Noise scaling: the Wiener term enters as sqrt(eps) sigma dW; the jump
// measure runs at clock rate (1/eps) phi(t,z) lambda(dz) with kicks
// eps g(u(t-), z), so the compensator drift is phi lambda-weighted and
// eps-free. The eps -> 0 limit of the controlled equation is the
// deterministic skeleton solved in rate.hpp.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "goyld/control.hpp"
#include "goyld/noise.hpp"
#include "goyld/shell.hpp"
#include "goyld/util.hpp"

namespace goyld {

// Weight applied to the jump control drift g(u,z) w(phi) lambda(dz):
// paper_literal uses w = ell, standard uses w(r) = r - 1.
enum class JumpDriftWeight { paper_literal, standard };
double jump_drift_weight_value(JumpDriftWeight w, double phi);
const char* to_string(JumpDriftWeight w);
JumpDriftWeight jump_drift_weight_from_string(const std::string& s);

struct IntegratorConfig {
  double dt = 1e-3;
  double T = 1.0;
  std::string scheme = "semi_implicit_em";
  double epsilon = 0.0;
  int record_stride = 1;

  void validate() const;
  long n_steps() const;
};

class BlowupError : public std::runtime_error {
 public:
  BlowupError(long step_index, double t)
      : std::runtime_error("trajectory blow-up at step " + std::to_string(step_index) +
                           " (t = " + std::to_string(t) + ")"),
        step_index(step_index),
        t(t) {}
  long step_index;
  double t;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ShellState> states;
  std::vector<double> energy;       // |u(t)|^2
  std::vector<double> enstrophy;    // ||u(t)||^2
  std::vector<double> dissipation;  // nu int_0^t ||u||^2 ds, accumulated every step
  JumpLog jumps;
  bool censored = false;
  long blowup_step = -1;

  const ShellState& final_state() const { return states.back(); }
  double final_energy() const { return energy.back(); }
};

// One uncontrolled step; throws BlowupError on a non-finite result.
ShellState step(const ShellState& u, double t, const ShellState& dW,
                const std::vector<std::pair<double, int>>& jumps_in_step,
                const ModelParams& params, const CoefficientFamily& fam,
                const MarkSpace& marks, const CovarianceQ& q, double dt,
                double epsilon, long step_index = 0);

Trajectory simulate(const ModelParams& params, const CoefficientFamily& fam,
                    const MarkSpace& marks, const CovarianceQ& q,
                    const IntegratorConfig& cfg, const ShellState& u0,
                    std::uint64_t seed, std::uint64_t traj_index = 0);

// Controlled dynamics: added drift sigma(t,u) psi(t) + sum_m g w(phi) lambda_m,
// jump clock at rate (1/eps) phi lambda. When log_weight is non-null it
// accumulates the likelihood log-ratio of the nominal dynamics against the
// sampling measure; with the standard drift weight this is exactly the
// importance-sampling weight.
Trajectory simulate_controlled(const ModelParams& params, const CoefficientFamily& fam,
                               const MarkSpace& marks, const CovarianceQ& q,
                               const IntegratorConfig& cfg, const ControlPath& control,
                               JumpDriftWeight w, const ShellState& u0,
                               std::uint64_t seed, std::uint64_t traj_index = 0,
                               double* log_weight = nullptr);

struct EnergyStats {
  MeanSE sup_energy;    // E sup_t |u(t)|^2
  MeanSE dissipation;   // E nu int ||u||^2 dt
  std::vector<std::pair<double, MeanSE>> p_moments;  // E sup_t |u(t)|^p
  std::size_t censored = 0;
  std::size_t n = 0;
};

EnergyStats energy_statistics(const std::vector<Trajectory>& ensemble,
                              const std::vector<double>& p_list);

namespace detail {

struct IntegrateOptions {
  const ControlPath* control = nullptr;
  JumpDriftWeight w = JumpDriftWeight::paper_literal;
  bool stochastic = true;
  double* log_weight = nullptr;
};

Trajectory integrate(const ModelParams& params, const CoefficientFamily& fam,
                     const MarkSpace& marks, const CovarianceQ& q,
                     const IntegratorConfig& cfg, const ShellState& u0,
                     std::uint64_t seed, std::uint64_t traj_index,
                     const IntegrateOptions& opts);

}  // namespace detail

}  // namespace goyld
