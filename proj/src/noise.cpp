#include "goyld/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace goyld {

CovarianceQ CovarianceQ::make(std::vector<double> q) {
  if (q.empty()) throw std::invalid_argument("covariance: q must be nonempty");
  bool any_positive = false;
  for (double v : q) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("covariance: q entries must be finite and nonnegative");
    }
    if (v > 0.0) any_positive = true;
  }
  if (!any_positive) throw std::invalid_argument("covariance: at least one q_n must be positive");
  CovarianceQ c;
  c.q = std::move(q);
  return c;
}

double CovarianceQ::trace() const {
  double s = 0.0;
  for (double v : q) s += v;
  return s;
}

MarkSpace MarkSpace::make(std::vector<std::string> labels, std::vector<double> weights) {
  if (labels.size() != weights.size()) {
    throw std::invalid_argument("marks: labels and weights must have equal length");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("marks: weights must be finite and positive");
    }
  }
  MarkSpace m;
  m.labels = std::move(labels);
  m.weights = std::move(weights);
  return m;
}

double MarkSpace::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

int PiecewisePhi::node_at(double t) const {
  int j = 0;
  while (j + 1 < static_cast<int>(times.size()) && times[j + 1] <= t) ++j;
  return j;
}

double PiecewisePhi::at(double t, int mark) const {
  return values[node_at(t)][mark];
}

const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::additive: return "additive";
    case FamilyKind::diagonal_multiplicative: return "diagonal_multiplicative";
    case FamilyKind::saturated_multiplicative: return "saturated_multiplicative";
  }
  return "additive";
}

FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "additive") return FamilyKind::additive;
  if (s == "diagonal_multiplicative") return FamilyKind::diagonal_multiplicative;
  if (s == "saturated_multiplicative") return FamilyKind::saturated_multiplicative;
  throw std::invalid_argument("unknown coefficient family kind: " + s);
}

CoefficientFamily CoefficientFamily::make(FamilyKind kind, std::vector<double> sigma_scale,
                                          std::vector<ShellState> jump_amps,
                                          const MarkSpace& marks, const CovarianceQ& q) {
  const int n = q.dim();
  if (static_cast<int>(sigma_scale.size()) != n) {
    throw std::invalid_argument("family: sigma_scale dimension must match q");
  }
  if (static_cast<int>(jump_amps.size()) != marks.size()) {
    throw std::invalid_argument("family: one jump amplitude vector per mark required");
  }
  for (const auto& c : jump_amps) {
    if (static_cast<int>(c.size()) != n) {
      throw std::invalid_argument("family: jump amplitude dimension must match q");
    }
    if (!all_finite(c)) throw std::invalid_argument("family: jump amplitudes must be finite");
  }
  for (double s : sigma_scale) {
    if (!std::isfinite(s)) throw std::invalid_argument("family: sigma_scale must be finite");
  }

  CoefficientFamily f;
  f.kind = kind;
  f.sigma_scale = std::move(sigma_scale);
  f.jump_amps = std::move(jump_amps);

  // per-shell combined weight q_n s_n^2 + sum_m lambda_m |c_{m,n}|^2
  std::vector<double> shell_weight(n, 0.0);
  for (int j = 0; j < n; ++j) shell_weight[j] = q.q[j] * f.sigma_scale[j] * f.sigma_scale[j];
  for (int m = 0; m < marks.size(); ++m) {
    for (int j = 0; j < n; ++j) shell_weight[j] += marks.weights[m] * std::norm(f.jump_amps[m][j]);
  }

  if (kind == FamilyKind::additive) {
    double total = 0.0;
    for (double w : shell_weight) total += w;
    f.growth_K = total;
    f.lipschitz_L = 0.0;  // constants have zero difference
  } else {
    // sigma_n and g_n scale the n-th amplitude through a 1-Lipschitz map
    double worst = 0.0;
    for (double w : shell_weight) worst = std::max(worst, w);
    f.growth_K = worst;
    f.lipschitz_L = worst;
  }
  return f;
}

namespace {

inline cplx saturate(cplx w) { return w / (1.0 + std::abs(w)); }

}  // namespace

std::vector<cplx> CoefficientFamily::sigma_diag(double /*t*/, const ShellState& u) const {
  const int n = static_cast<int>(sigma_scale.size());
  std::vector<cplx> d(n);
  switch (kind) {
    case FamilyKind::additive:
      for (int j = 0; j < n; ++j) d[j] = sigma_scale[j];
      break;
    case FamilyKind::diagonal_multiplicative:
      for (int j = 0; j < n; ++j) d[j] = sigma_scale[j] * u[j];
      break;
    case FamilyKind::saturated_multiplicative:
      for (int j = 0; j < n; ++j) d[j] = sigma_scale[j] * saturate(u[j]);
      break;
  }
  return d;
}

ShellState CoefficientFamily::jump_coeff(const ShellState& u, int mark) const {
  if (mark < 0 || mark >= static_cast<int>(jump_amps.size())) {
    throw std::domain_error("jump_coeff: unknown mark");
  }
  const ShellState& c = jump_amps[mark];
  const int n = static_cast<int>(c.size());
  ShellState g(n);
  switch (kind) {
    case FamilyKind::additive:
      g = c;
      break;
    case FamilyKind::diagonal_multiplicative:
      for (int j = 0; j < n; ++j) g[j] = c[j] * u[j];
      break;
    case FamilyKind::saturated_multiplicative:
      for (int j = 0; j < n; ++j) g[j] = c[j] * saturate(u[j]);
      break;
  }
  return g;
}

double CoefficientFamily::sigma_lq_sq(double t, const ShellState& u,
                                      const CovarianceQ& q) const {
  const std::vector<cplx> d = sigma_diag(t, u);
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) s += q.q[j] * std::norm(d[j]);
  return s;
}

double CoefficientFamily::jump_growth_sq(const ShellState& u, const MarkSpace& marks) const {
  double s = 0.0;
  for (int m = 0; m < marks.size(); ++m) {
    s += marks.weights[m] * h_norm2(jump_coeff(u, m));
  }
  return s;
}

ShellState sample_wiener_increment(double dt, const CovarianceQ& q, RngStream& rng) {
  if (!(dt > 0.0)) throw std::domain_error("wiener increment: dt must be positive");
  const int n = q.dim();
  ShellState inc(n);
  for (int j = 0; j < n; ++j) {
    const double amp = std::sqrt(q.q[j] * dt / 2.0);
    inc[j] = amp * rng.next_complex_gaussian();
  }
  return inc;
}

JumpLog sample_jump_times(double T, const MarkSpace& marks, double rate_scale,
                          const PiecewisePhi* phi, RngStream& rng) {
  if (!(rate_scale > 0.0) || !std::isfinite(rate_scale)) {
    throw std::domain_error("jump sampling: rate_scale must be positive and finite");
  }
  JumpLog log;
  const int m_count = marks.size();
  if (m_count == 0 || T <= 0.0) return log;

  // dominating rate over the horizon
  double rbar = 0.0;
  if (phi) {
    for (const auto& node : phi->values) {
      if (static_cast<int>(node.size()) != m_count) {
        throw std::domain_error("jump sampling: phi mark dimension mismatch");
      }
      double total = 0.0;
      for (int m = 0; m < m_count; ++m) {
        const double p = node[m];
        if (p < 0.0) throw std::domain_error("jump sampling: negative intensity");
        if (!std::isfinite(p)) throw std::domain_error("jump sampling: unbounded intensity");
        total += p * marks.weights[m];
      }
      rbar = std::max(rbar, rate_scale * total);
    }
  } else {
    rbar = rate_scale * marks.total_mass();
  }
  if (rbar <= 0.0) return log;

  double t = 0.0;
  for (;;) {
    t += rng.next_exponential(rbar);
    if (t > T) break;
    const double u = rng.next_unit() * rbar;  // in (0, rbar)
    double acc = 0.0;
    int mark = -1;
    for (int m = 0; m < m_count; ++m) {
      const double p = phi ? phi->at(t, m) : 1.0;
      acc += rate_scale * p * marks.weights[m];
      if (u <= acc) {
        mark = m;
        break;
      }
    }
    if (mark >= 0) log.events.emplace_back(t, mark);
  }
  return log;
}

HypothesisAudit audit_hypotheses(const CoefficientFamily& fam, const MarkSpace& marks,
                                 const CovarianceQ& q, int n_shells, int samples,
                                 std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("audit: samples >= 1");
  HypothesisAudit a;
  a.samples = samples;
  RngStream rng = RngStream::derive(seed, 2, 0);
  for (int s = 0; s < samples; ++s) {
    const double scale_u = std::pow(10.0, 2.0 * rng.next_unit() - 1.0);
    const double scale_v = std::pow(10.0, 2.0 * rng.next_unit() - 1.0);
    const ShellState u = gaussian_state(n_shells, rng, scale_u);
    const ShellState v = gaussian_state(n_shells, rng, scale_v);

    const double growth = fam.sigma_lq_sq(0.0, u, q) + fam.jump_growth_sq(u, marks);
    a.K_hat = std::max(a.K_hat, growth / (1.0 + h_norm2(u)));

    const double d2 = h_norm2(sub(u, v));
    if (d2 > 0.0) {
      const std::vector<cplx> du = fam.sigma_diag(0.0, u);
      const std::vector<cplx> dv = fam.sigma_diag(0.0, v);
      double diff = 0.0;
      for (int j = 0; j < n_shells; ++j) diff += q.q[j] * std::norm(du[j] - dv[j]);
      for (int m = 0; m < marks.size(); ++m) {
        diff += marks.weights[m] * h_norm2(sub(fam.jump_coeff(u, m), fam.jump_coeff(v, m)));
      }
      a.L_hat = std::max(a.L_hat, diff / d2);
    }
  }
  const double slack = 1.0 + 1e-9;
  a.pass = (a.K_hat <= fam.growth_K * slack) &&
           (a.L_hat <= fam.lipschitz_L * slack + (fam.lipschitz_L == 0.0 ? 1e-18 : 0.0));
  return a;
}

}  // namespace goyld
