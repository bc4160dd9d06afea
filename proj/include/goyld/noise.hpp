#pragma once
// Q-Wiener and marked Poisson sampling plus the built-in coefficient
// families. Families are a fixed menu so the growth constant K and the
// Lipschitz constant L can be computed at construction and audited.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "goyld/rng.hpp"
#include "goyld/shell.hpp"

namespace goyld {

struct CovarianceQ {
  std::vector<double> q;  // diagonal in the shell basis

  static CovarianceQ make(std::vector<double> q);
  double trace() const;
  int dim() const { return static_cast<int>(q.size()); }
};

struct MarkSpace {
  std::vector<std::string> labels;
  std::vector<double> weights;  // intensity measure, all positive

  static MarkSpace make(std::vector<std::string> labels, std::vector<double> weights);
  int size() const { return static_cast<int>(weights.size()); }
  double total_mass() const;
};

// Piecewise-constant per-mark intensity factor phi(t, z).
struct PiecewisePhi {
  std::vector<double> times;                 // ascending, first node at 0
  std::vector<std::vector<double>> values;   // [node][mark]

  int node_at(double t) const;
  double at(double t, int mark) const;
};

enum class FamilyKind { additive, diagonal_multiplicative, saturated_multiplicative };
const char* to_string(FamilyKind k);
FamilyKind family_kind_from_string(const std::string& s);

struct CoefficientFamily {
  FamilyKind kind = FamilyKind::additive;
  std::vector<double> sigma_scale;        // per-shell scale s_n
  std::vector<ShellState> jump_amps;      // per-mark, per-shell amplitudes c_{m,n}
  double growth_K = 0.0;                  // |sigma|_{L_Q}^2 + sum |g|^2 lambda <= K (1 + |u|^2)
  double lipschitz_L = 0.0;               // difference bound with L |u - v|^2

  static CoefficientFamily make(FamilyKind kind, std::vector<double> sigma_scale,
                                std::vector<ShellState> jump_amps,
                                const MarkSpace& marks, const CovarianceQ& q);

  // diagonal action of sigma(t, u)
  std::vector<cplx> sigma_diag(double t, const ShellState& u) const;
  ShellState jump_coeff(const ShellState& u, int mark) const;  // g(u, z_m)

  // |sigma(t,u)|_{L_Q}^2 = sum q_n |d_n|^2
  double sigma_lq_sq(double t, const ShellState& u, const CovarianceQ& q) const;
  // sum_m |g(u, z_m)|^2 lambda_m
  double jump_growth_sq(const ShellState& u, const MarkSpace& marks) const;
};

struct JumpLog {
  std::vector<std::pair<double, int>> events;  // (time, mark), strictly increasing
  std::size_t size() const { return events.size(); }
};

// Complex Gaussian increment with E|dW_n|^2 = q_n dt, independent across shells.
ShellState sample_wiener_increment(double dt, const CovarianceQ& q, RngStream& rng);

// Marked Poisson process on [0, T] with instantaneous rate
// rate_scale * sum_m phi(t, z_m) lambda_m (phi = 1 when absent), realized by
// thinning against the dominating constant rate.
JumpLog sample_jump_times(double T, const MarkSpace& marks, double rate_scale,
                          const PiecewisePhi* phi, RngStream& rng);

struct HypothesisAudit {
  double K_hat = 0.0;
  double L_hat = 0.0;
  bool pass = false;
  int samples = 0;
};

HypothesisAudit audit_hypotheses(const CoefficientFamily& fam, const MarkSpace& marks,
                                 const CovarianceQ& q, int n_shells, int samples,
                                 std::uint64_t seed);

}  // namespace goyld
