#pragma once
// Finite dyadic shell grid, complex amplitude states, the operators A, B, F
// and the norms used throughout. Amplitudes are indexed 0..N-1 for shells
// 1..N; the two modes beyond each end read as zero.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "goyld/rng.hpp"

namespace goyld {

using cplx = std::complex<double>;
using ShellState = std::vector<cplx>;

struct ShellGrid {
  double k0 = 1.0;
  int n_shells = 0;
  std::vector<double> k;  // k[j] = k0 * 2^(j+1) for shell n = j+1

  static ShellGrid make(double k0, int n_shells);
};

// Piecewise-constant-in-time forcing, stored as shell amplitudes per node.
struct Forcing {
  std::vector<double> times;        // ascending, first node at t = 0
  std::vector<ShellState> values;

  bool empty() const { return times.empty(); }
  const ShellState* at(double t) const;
  // exact integral of ||f||_{V'}^2 over [0, T]
  double vprime_sq_integral(const ShellGrid& grid, double T) const;
};

struct ModelParams {
  double nu = 1.0;
  ShellGrid grid;
  std::array<double, 3> goy_coeffs{1.0, -0.5, -0.5};  // requires a + b + c = 0
  bool canonical_b = true;  // fixed 1/4,1/2,1/2,1/8 weights; otherwise (a,b,c) form
  bool b_enabled = true;
  Forcing forcing;
};

void validate_params(const ModelParams& p);

// --- small state helpers ---------------------------------------------------

ShellState zero_state(int n);
ShellState basis_state(int n, int index, cplx amp = cplx(1.0, 0.0));
// entries are standard complex Gaussian (E|u_n|^2 = scale^2)
ShellState gaussian_state(int n, RngStream& rng, double scale = 1.0);

inline void axpy(ShellState& y, cplx a, const ShellState& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
inline void axpy(ShellState& y, double a, const ShellState& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
ShellState sub(const ShellState& a, const ShellState& b);
ShellState scaled(const ShellState& a, cplx s);
bool all_finite(const ShellState& u);

// --- operators ---------------------------------------------------------------

ShellState apply_A(const ShellState& u, const ShellGrid& grid);

// canonical bilinear form, zero-padded two modes beyond each end
ShellState apply_B(const ShellState& u, const ShellState& v, const ShellGrid& grid);

// (a,b,c) form of the equations of motion, bilinearized with the first factor
// from u and the second from v
ShellState apply_B_goy(const ShellState& u, const ShellState& v, const ShellGrid& grid,
                       const std::array<double, 3>& coeffs);

// B as selected by params.canonical_b (identity zero when b_enabled is false)
ShellState model_B(const ShellState& u, const ShellState& v, const ModelParams& p);

// F(u) = -nu A u - B(u, u)
ShellState apply_F(const ShellState& u, const ModelParams& p);

// --- norms (fixed left-to-right summation order) ----------------------------

double h_norm2(const ShellState& u);
double h_norm(const ShellState& u);
double v_norm2(const ShellState& u, const ShellGrid& grid);
double v_norm(const ShellState& u, const ShellGrid& grid);
double l4_norm(const ShellState& u);
// (sum (k_n^s |u_n|)^p)^(1/p); sup over n when p = infinity; requires p >= 1
double wsp_norm(const ShellState& u, const ShellGrid& grid, double s, double p);
double vprime_norm(const ShellState& u, const ShellGrid& grid);
double h_inner(const ShellState& u, const ShellState& v);  // Re sum u conj(v)

// --- empirical operator bounds ----------------------------------------------

struct OperatorBoundReport {
  double c1 = 0;  // |B(u,v)| / (||u|| |v|)
  double c2 = 0;  // |B(u,v)| / (|u| ||v||)
  double c3 = 0;  // ||B(u,v)||_{V'} / (|u| |v|)
  double c4 = 0;  // ||B(u,v)||_V / (|u| |Av|)
  int samples = 0;
  std::uint64_t seed = 0;
};

// Maxima over a structured sweep (basis pairs, geometric profiles) plus
// `samples` random Gaussian pairs. Extending `samples` only adds candidates,
// so the maxima are monotone under sample doubling at fixed seed.
OperatorBoundReport measure_operator_bounds(const ShellGrid& grid, int samples,
                                            std::uint64_t seed);

// max over random states of ||u||_{l4}^4 * k_1^2 / (|u|^2 ||u||^2)
double max_l4_interpolation_ratio(const ShellGrid& grid, int samples,
                                  std::uint64_t seed);

}  // namespace goyld
