#include "goyld/shell.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace goyld {

ShellGrid ShellGrid::make(double k0, int n_shells) {
  if (!(k0 > 0.0)) throw std::invalid_argument("grid: k0 must be positive");
  if (n_shells < 3) throw std::invalid_argument("grid: n_shells must be at least 3");
  ShellGrid g;
  g.k0 = k0;
  g.n_shells = n_shells;
  g.k.resize(n_shells);
  for (int j = 0; j < n_shells; ++j) g.k[j] = std::ldexp(k0, j + 1);  // exact doubling
  return g;
}

const ShellState* Forcing::at(double t) const {
  if (times.empty()) return nullptr;
  std::size_t j = 0;
  while (j + 1 < times.size() && times[j + 1] <= t) ++j;
  return &values[j];
}

double Forcing::vprime_sq_integral(const ShellGrid& grid, double T) const {
  if (times.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t0 = times[j];
    const double t1 = (j + 1 < times.size()) ? std::min(times[j + 1], T) : T;
    if (t1 <= t0) continue;
    const double vp = vprime_norm(values[j], grid);
    acc += (t1 - t0) * vp * vp;
  }
  return acc;
}

void validate_params(const ModelParams& p) {
  if (!(p.nu > 0.0)) throw std::invalid_argument("model: nu must be positive");
  if (p.grid.n_shells < 3 || static_cast<int>(p.grid.k.size()) != p.grid.n_shells) {
    throw std::invalid_argument("model: grid not initialized");
  }
  if (!p.canonical_b) {
    const double sum = p.goy_coeffs[0] + p.goy_coeffs[1] + p.goy_coeffs[2];
    double scale = 0.0;
    for (double c : p.goy_coeffs) scale = std::max(scale, std::abs(c));
    if (std::abs(sum) > 1e-12 * std::max(1.0, scale)) {
      throw std::invalid_argument("model: goy_coeffs must satisfy a + b + c = 0");
    }
  }
  for (std::size_t j = 0; j < p.forcing.times.size(); ++j) {
    if (static_cast<int>(p.forcing.values[j].size()) != p.grid.n_shells) {
      throw std::invalid_argument("model: forcing value dimension mismatch");
    }
    if (j > 0 && !(p.forcing.times[j] > p.forcing.times[j - 1])) {
      throw std::invalid_argument("model: forcing times must be increasing");
    }
  }
  if (!p.forcing.times.empty() && p.forcing.times[0] != 0.0) {
    throw std::invalid_argument("model: forcing must start at t = 0");
  }
}

ShellState zero_state(int n) { return ShellState(n, cplx(0.0, 0.0)); }

ShellState basis_state(int n, int index, cplx amp) {
  ShellState u(n, cplx(0.0, 0.0));
  u[index] = amp;
  return u;
}

ShellState gaussian_state(int n, RngStream& rng, double scale) {
  ShellState u(n);
  const double a = scale / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) u[j] = a * rng.next_complex_gaussian();
  return u;
}

ShellState sub(const ShellState& a, const ShellState& b) {
  ShellState r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

ShellState scaled(const ShellState& a, cplx s) {
  ShellState r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

bool all_finite(const ShellState& u) {
  for (const cplx& z : u) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

namespace {

void check_dim(const ShellState& u, const ShellGrid& grid, const char* what) {
  if (static_cast<int>(u.size()) != grid.n_shells) {
    throw std::invalid_argument(std::string(what) + ": state dimension does not match grid");
  }
}

}  // namespace

ShellState apply_A(const ShellState& u, const ShellGrid& grid) {
  check_dim(u, grid, "apply_A");
  ShellState out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = grid.k[j] * grid.k[j] * u[j];
  return out;
}

ShellState apply_B(const ShellState& u, const ShellState& v, const ShellGrid& grid) {
  check_dim(u, grid, "apply_B");
  check_dim(v, grid, "apply_B");
  const int n = grid.n_shells;
  auto uc = [&](int j) -> cplx { return (j >= 0 && j < n) ? std::conj(u[j]) : cplx(0.0); };
  auto vc = [&](int j) -> cplx { return (j >= 0 && j < n) ? std::conj(v[j]) : cplx(0.0); };
  ShellState out(n);
  const cplx iu(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    const cplx t = 0.25 * uc(j + 1) * vc(j - 1)
                 - 0.5 * (uc(j + 1) * vc(j + 2) + uc(j + 2) * vc(j + 1))
                 + 0.125 * uc(j - 1) * vc(j - 2);
    out[j] = iu * grid.k[j] * t;
  }
  return out;
}

ShellState apply_B_goy(const ShellState& u, const ShellState& v, const ShellGrid& grid,
                       const std::array<double, 3>& coeffs) {
  check_dim(u, grid, "apply_B_goy");
  check_dim(v, grid, "apply_B_goy");
  const int n = grid.n_shells;
  const double a = coeffs[0], b = coeffs[1], c = coeffs[2];
  auto uc = [&](int j) -> cplx { return (j >= 0 && j < n) ? std::conj(u[j]) : cplx(0.0); };
  auto vc = [&](int j) -> cplx { return (j >= 0 && j < n) ? std::conj(v[j]) : cplx(0.0); };
  // k_m for any integer m; out-of-range factors are zero anyway
  auto kk = [&](int m) -> double { return std::ldexp(grid.k0, m + 1); };
  ShellState out(n);
  const cplx iu(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    const cplx t = a * kk(j) * uc(j + 1) * vc(j + 2)
                 + b * kk(j - 1) * uc(j - 1) * vc(j + 1)
                 + c * kk(j - 2) * uc(j - 1) * vc(j - 2);
    out[j] = iu * t;
  }
  return out;
}

ShellState model_B(const ShellState& u, const ShellState& v, const ModelParams& p) {
  if (!p.b_enabled) return zero_state(p.grid.n_shells);
  return p.canonical_b ? apply_B(u, v, p.grid) : apply_B_goy(u, v, p.grid, p.goy_coeffs);
}

ShellState apply_F(const ShellState& u, const ModelParams& p) {
  check_dim(u, p.grid, "apply_F");
  ShellState out = model_B(u, u, p);
  for (int j = 0; j < p.grid.n_shells; ++j) {
    out[j] = -p.nu * p.grid.k[j] * p.grid.k[j] * u[j] - out[j];
  }
  return out;
}

double h_norm2(const ShellState& u) {
  double s = 0.0;
  for (const cplx& z : u) s += std::norm(z);
  return s;
}

double h_norm(const ShellState& u) { return std::sqrt(h_norm2(u)); }

double v_norm2(const ShellState& u, const ShellGrid& grid) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += grid.k[j] * grid.k[j] * std::norm(u[j]);
  return s;
}

double v_norm(const ShellState& u, const ShellGrid& grid) {
  return std::sqrt(v_norm2(u, grid));
}

double l4_norm(const ShellState& u) {
  double s = 0.0;
  for (const cplx& z : u) {
    const double m = std::norm(z);
    s += m * m;
  }
  return std::pow(s, 0.25);
}

double wsp_norm(const ShellState& u, const ShellGrid& grid, double s, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      m = std::max(m, std::pow(grid.k[j], s) * std::abs(u[j]));
    }
    return m;
  }
  if (!(p >= 1.0)) throw std::domain_error("wsp_norm: p must be >= 1 or infinity");
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    acc += std::pow(std::pow(grid.k[j], s) * std::abs(u[j]), p);
  }
  return std::pow(acc, 1.0 / p);
}

double vprime_norm(const ShellState& u, const ShellGrid& grid) {
  return wsp_norm(u, grid, -1.0, 2.0);
}

double h_inner(const ShellState& u, const ShellState& v) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += (u[j] * std::conj(v[j])).real();
  return s;
}

namespace {

void fold_bound_sample(const ShellState& u, const ShellState& v, const ShellGrid& grid,
                       OperatorBoundReport& rep) {
  const ShellState b = apply_B(u, v, grid);
  const double bh = h_norm(b);
  const double uh = h_norm(u), vh = h_norm(v);
  const double uv = v_norm(u, grid), vv = v_norm(v, grid);
  const double av = h_norm(apply_A(v, grid));
  if (uv > 0 && vh > 0) rep.c1 = std::max(rep.c1, bh / (uv * vh));
  if (uh > 0 && vv > 0) rep.c2 = std::max(rep.c2, bh / (uh * vv));
  if (uh > 0 && vh > 0) rep.c3 = std::max(rep.c3, vprime_norm(b, grid) / (uh * vh));
  if (uh > 0 && av > 0) rep.c4 = std::max(rep.c4, v_norm(b, grid) / (uh * av));
}

}  // namespace

OperatorBoundReport measure_operator_bounds(const ShellGrid& grid, int samples,
                                            std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("measure_operator_bounds: samples >= 1");
  OperatorBoundReport rep;
  rep.samples = samples;
  rep.seed = seed;
  const int n = grid.n_shells;

  // structured sweep: basis pairs and geometric modulus profiles
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      fold_bound_sample(basis_state(n, i), basis_state(n, j), grid, rep);
    }
  }
  const double rhos[] = {0.5, 0.75, 1.0, 1.0 / std::sqrt(2.0)};
  std::vector<ShellState> profiles;
  for (double rho : rhos) {
    ShellState u(n);
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      u[j] = cplx(w, 0.0);
      w *= rho;
    }
    profiles.push_back(u);
  }
  for (const auto& a : profiles) {
    for (const auto& b : profiles) fold_bound_sample(a, b, grid, rep);
  }

  RngStream rng = RngStream::derive(seed, 0, 0);
  for (int s = 0; s < samples; ++s) {
    const ShellState u = gaussian_state(n, rng);
    const ShellState v = gaussian_state(n, rng);
    fold_bound_sample(u, v, grid, rep);
  }
  if (!(std::isfinite(rep.c1) && std::isfinite(rep.c2) && std::isfinite(rep.c3) &&
        std::isfinite(rep.c4))) {
    throw std::runtime_error("measure_operator_bounds: non-finite ratio encountered");
  }
  return rep;
}

double max_l4_interpolation_ratio(const ShellGrid& grid, int samples, std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, 1, 0);
  const double k1sq = grid.k[0] * grid.k[0];
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const ShellState u = gaussian_state(grid.n_shells, rng);
    const double l4 = l4_norm(u);
    const double denom = h_norm2(u) * v_norm2(u, grid);
    if (denom > 0) worst = std::max(worst, l4 * l4 * l4 * l4 * k1sq / denom);
  }
  return worst;
}

}  // namespace goyld
