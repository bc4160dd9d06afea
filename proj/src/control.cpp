#include "goyld/control.hpp"

#include <cmath>
#include <stdexcept>

namespace goyld {

double ell(double r) {
  if (r < 0.0) throw std::domain_error("ell: argument must be nonnegative");
  if (r == 0.0) return 1.0;
  double v = r * std::log(r) - r + 1.0;
  if (v < 0.0 && v > -1e-12) v = 0.0;  // rounding near the minimum at r = 1
  return v;
}

double h0_norm2(const ShellState& psi, const CovarianceQ& q) {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    if (q.q[j] > 0.0) {
      s += 2.0 * std::norm(psi[j]) / q.q[j];
    } else if (std::norm(psi[j]) > 0.0) {
      throw std::domain_error("h0_norm2: psi must vanish on modes with zero covariance");
    }
  }
  return s;
}

ControlPath ControlPath::null_control(int n_shells, int n_marks) {
  ControlPath c;
  c.time_grid = {0.0};
  c.psi = {zero_state(n_shells)};
  c.phi = {std::vector<double>(n_marks, 1.0)};
  return c;
}

void ControlPath::validate(int n_shells, int n_marks, const CovarianceQ& q) const {
  if (time_grid.empty()) throw std::invalid_argument("control: time_grid must be nonempty");
  if (time_grid.front() != 0.0) throw std::invalid_argument("control: time_grid must start at 0");
  for (std::size_t j = 1; j < time_grid.size(); ++j) {
    if (!(time_grid[j] > time_grid[j - 1])) {
      throw std::invalid_argument("control: time_grid must be strictly increasing");
    }
  }
  if (psi.size() != time_grid.size() || phi.size() != time_grid.size()) {
    throw std::invalid_argument("control: psi and phi must have one entry per time node");
  }
  for (const auto& p : psi) {
    if (static_cast<int>(p.size()) != n_shells) {
      throw std::invalid_argument("control: psi dimension must match the shell count");
    }
    if (!all_finite(p)) throw std::invalid_argument("control: psi must be finite");
    for (int j = 0; j < n_shells; ++j) {
      if (q.q[j] == 0.0 && std::norm(p[j]) > 0.0) {
        throw std::invalid_argument("control: psi must vanish on modes with zero covariance");
      }
    }
  }
  for (const auto& node : phi) {
    if (static_cast<int>(node.size()) != n_marks) {
      throw std::invalid_argument("control: phi dimension must match the mark count");
    }
    for (double v : node) {
      if (!(v >= 0.0)) throw std::invalid_argument("control: phi must be nonnegative");
      if (!std::isfinite(v)) throw std::invalid_argument("control: phi must be finite");
    }
  }
}

int ControlPath::node_at(double t) const {
  int j = 0;
  while (j + 1 < static_cast<int>(time_grid.size()) && time_grid[j + 1] <= t) ++j;
  return j;
}

const ShellState& ControlPath::psi_at(double t) const { return psi[node_at(t)]; }

double ControlPath::phi_at(double t, int mark) const { return phi[node_at(t)][mark]; }

PiecewisePhi ControlPath::phi_view() const {
  PiecewisePhi v;
  v.times = time_grid;
  v.values = phi;
  return v;
}

CostBreakdown control_cost(const ControlPath& ctrl, const MarkSpace& marks,
                           const CovarianceQ& q, double T) {
  CostBreakdown c;
  const std::size_t nodes = ctrl.time_grid.size();
  for (std::size_t j = 0; j < nodes; ++j) {
    const double t0 = ctrl.time_grid[j];
    const double t1 = (j + 1 < nodes) ? std::min(ctrl.time_grid[j + 1], T) : T;
    if (t1 <= t0) continue;
    const double dt = t1 - t0;
    double jump_rate = 0.0;
    for (int m = 0; m < marks.size(); ++m) {
      jump_rate += ell(ctrl.phi[j][m]) * marks.weights[m];
    }
    c.jump_cost += jump_rate * dt;
    c.gaussian_cost += 0.5 * h0_norm2(ctrl.psi[j], q) * dt;
  }
  c.total = c.jump_cost + c.gaussian_cost;
  return c;
}

}  // namespace goyld
