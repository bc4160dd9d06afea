#pragma once
// Piecewise-constant controls theta = (psi, phi), the entropy cost of jump
// tilts and the Cameron-Martin cost of Gaussian drifts.

#include <vector>

#include "goyld/noise.hpp"
#include "goyld/shell.hpp"

namespace goyld {

// ell(r) = r log r - r + 1 on [0, inf), extended continuously with ell(0) = 1.
double ell(double r);

// Cameron-Martin energy of a drift psi on the complex Q-Wiener process with
// E|dW_n|^2 = q_n dt: each shell carries two real components of variance
// q_n/2, so ||psi||_0^2 = 2 sum |psi_n|^2 / q_n (modes with q_n = 0 excluded,
// where psi must vanish).
double h0_norm2(const ShellState& psi, const CovarianceQ& q);

struct ControlPath {
  std::vector<double> time_grid;             // ascending, first node at 0
  std::vector<ShellState> psi;               // per node
  std::vector<std::vector<double>> phi;      // per node, per mark

  static ControlPath null_control(int n_shells, int n_marks);

  void validate(int n_shells, int n_marks, const CovarianceQ& q) const;
  int node_at(double t) const;
  const ShellState& psi_at(double t) const;
  double phi_at(double t, int mark) const;
  PiecewisePhi phi_view() const;
};

struct CostBreakdown {
  double jump_cost = 0.0;      // integral of sum_m ell(phi) lambda_m dt
  double gaussian_cost = 0.0;  // 1/2 integral of ||psi||_0^2 dt
  double total = 0.0;
};

// Exact quadrature for piecewise-constant controls over [0, T]; the last
// node extends to the horizon.
CostBreakdown control_cost(const ControlPath& ctrl, const MarkSpace& marks,
                           const CovarianceQ& q, double T);

}  // namespace goyld
