#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "goyld/noise.hpp"
#include "goyld/util.hpp"

using namespace goyld;

TEST_CASE("covariance and mark space validation") {
  CHECK_THROWS_AS(CovarianceQ::make({}), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceQ::make({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceQ::make({-1.0, 1.0}), std::invalid_argument);
  const CovarianceQ q = CovarianceQ::make({1.0, 0.5, 0.0});
  CHECK(q.trace() == 1.5);

  CHECK_THROWS_AS(MarkSpace::make({"a"}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(MarkSpace::make({"a"}, {1.0, 2.0}), std::invalid_argument);
  const MarkSpace m = MarkSpace::make({"a", "b"}, {1.0, 3.0});
  CHECK(m.total_mass() == 4.0);
}

TEST_CASE("wiener increments: law, zero modes, errors") {
  const CovarianceQ q = CovarianceQ::make({1.0, 0.5, 0.0});
  RngStream rng = RngStream::derive(21, 0, 0);
  CHECK_THROWS_AS(sample_wiener_increment(0.0, q, rng), std::domain_error);

  const double dt = 0.01;
  const int draws = 50000;
  std::vector<double> acc(3, 0.0);
  std::vector<double> re_acc(3, 0.0);
  for (int i = 0; i < draws; ++i) {
    const ShellState inc = sample_wiener_increment(dt, q, rng);
    CHECK(inc[2] == cplx(0, 0));  // q_3 = 0 gives an exactly zero increment
    for (int j = 0; j < 3; ++j) {
      acc[j] += std::norm(inc[j]) / dt;
      re_acc[j] += inc[j].real();
    }
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = acc[j] / draws;
    const double se = q.q[j] / std::sqrt(static_cast<double>(draws));
    CHECK(std::abs(mean - q.q[j]) <= 3.0 * se);
    const double mean_re = re_acc[j] / draws;
    const double se_re = std::sqrt(q.q[j] * dt / 2.0 / draws);
    CHECK(std::abs(mean_re) <= 3.0 * se_re);
  }
}

TEST_CASE("disjoint wiener increments are uncorrelated") {
  const CovarianceQ q = CovarianceQ::make({1.0});
  RngStream rng = RngStream::derive(22, 0, 0);
  const double dt = 0.5;
  const int pairs = 40000;
  double acc = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const ShellState a = sample_wiener_increment(dt, q, rng);
    const ShellState b = sample_wiener_increment(dt, q, rng);
    acc += a[0].real() * b[0].real();
  }
  const double cov = acc / pairs;
  const double se = (q.q[0] * dt / 2.0) / std::sqrt(static_cast<double>(pairs));
  CHECK(std::abs(cov) <= 3.0 * se);
}

TEST_CASE("jump sampling: empty cases, poisson moments, mark fractions") {
  const MarkSpace m1 = MarkSpace::make({"z"}, {2.0});
  {
    RngStream rng = RngStream::derive(23, 0, 0);
    PiecewisePhi zero;
    zero.times = {0.0};
    zero.values = {{0.0}};
    CHECK(sample_jump_times(1.0, m1, 1.0, &zero, rng).size() == 0);
    CHECK_THROWS_AS(sample_jump_times(1.0, m1, 0.0, nullptr, rng), std::domain_error);
    PiecewisePhi neg;
    neg.times = {0.0};
    neg.values = {{-0.5}};
    CHECK_THROWS_AS(sample_jump_times(1.0, m1, 1.0, &neg, rng), std::domain_error);
  }

  // lambda = 2, T = 1: counts are Poisson(2)
  const int runs = 100000;
  std::vector<double> counts(runs);
  for (int i = 0; i < runs; ++i) {
    RngStream rng = RngStream::derive(24, i, 0);
    counts[i] = static_cast<double>(sample_jump_times(1.0, m1, 1.0, nullptr, rng).size());
  }
  const MeanSE ms = mean_se(counts);
  CHECK(std::abs(ms.mean - 2.0) <= 3.0 * ms.se);
  double ss = 0.0;
  for (double c : counts) ss += (c - ms.mean) * (c - ms.mean);
  const double var = ss / (runs - 1.0);
  // Var of the sample variance for Poisson(2) is (mu4 - var^2)/n = 10/n
  CHECK(std::abs(var - 2.0) <= 3.0 * std::sqrt(10.0 / runs));

  // two marks with weights (1, 3): mark-2 fraction -> 0.75
  const MarkSpace m2 = MarkSpace::make({"a", "b"}, {1.0, 3.0});
  long total = 0, second = 0;
  for (int i = 0; i < 20000; ++i) {
    RngStream rng = RngStream::derive(25, i, 0);
    const JumpLog log = sample_jump_times(1.0, m2, 1.0, nullptr, rng);
    for (const auto& [t, mk] : log.events) {
      ++total;
      if (mk == 1) ++second;
    }
  }
  const double frac = static_cast<double>(second) / total;
  const double se = std::sqrt(0.75 * 0.25 / total);
  CHECK(std::abs(frac - 0.75) <= 3.0 * se);
}

TEST_CASE("jump log times strictly increase and respect the horizon") {
  const MarkSpace m = MarkSpace::make({"z"}, {50.0});
  RngStream rng = RngStream::derive(26, 0, 0);
  const JumpLog log = sample_jump_times(2.0, m, 1.0, nullptr, rng);
  CHECK(log.size() > 50);
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    CHECK(log.events[i].first > 0.0);
    CHECK(log.events[i].first <= 2.0);
    if (i > 0) CHECK(log.events[i].first > log.events[i - 1].first);
  }
}

TEST_CASE("coefficient family evaluation per kind") {
  const CovarianceQ q = CovarianceQ::make({1.0, 1.0, 1.0});
  const MarkSpace marks = MarkSpace::make({"z"}, {2.0});
  const std::vector<ShellState> amps = {basis_state(3, 0, cplx(0.5, 0.5))};
  RngStream rng = RngStream::derive(27, 0, 0);
  const ShellState u = gaussian_state(3, rng);

  const CoefficientFamily add =
      CoefficientFamily::make(FamilyKind::additive, {1.0, 2.0, 3.0}, amps, marks, q);
  const std::vector<cplx> d = add.sigma_diag(0.0, u);
  CHECK(d[1] == cplx(2.0, 0.0));  // state-independent
  CHECK(add.jump_coeff(u, 0) == amps[0]);
  CHECK_THROWS_AS(add.jump_coeff(u, 1), std::domain_error);

  const CoefficientFamily mul = CoefficientFamily::make(
      FamilyKind::diagonal_multiplicative, {1.0, 1.0, 1.0}, amps, marks, q);
  CHECK(h_norm(mul.jump_coeff(zero_state(3), 0)) == 0.0);
  const std::vector<cplx> dm = mul.sigma_diag(0.0, zero_state(3));
  for (const cplx& z : dm) CHECK(z == cplx(0, 0));

  const CoefficientFamily sat = CoefficientFamily::make(
      FamilyKind::saturated_multiplicative, {1.0, 1.0, 1.0}, amps, marks, q);
  const std::vector<cplx> ds = sat.sigma_diag(0.0, u);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(ds[j]) <= 1.0 + 1e-12);  // bounded by s_n
}

TEST_CASE("hypothesis audits: constructor constants dominate the sampled ratios") {
  const int n = 16;
  std::vector<double> qv(n, 1.0);
  const CovarianceQ q = CovarianceQ::make(qv);
  const MarkSpace marks = MarkSpace::make({"z"}, {1.0});
  const std::vector<ShellState> amps = {basis_state(n, 0, cplx(0.3, 0.0))};
  const std::vector<double> s(n, 1.0);

  const CoefficientFamily add =
      CoefficientFamily::make(FamilyKind::additive, s, amps, marks, q);
  const HypothesisAudit a_add = audit_hypotheses(add, marks, q, n, 1000, 5);
  CHECK(a_add.pass);
  CHECK(a_add.L_hat == 0.0);

  // sigma-only diagonal multiplicative: K_hat <= s^2 max q
  const MarkSpace no_marks = MarkSpace::make({}, {});
  const CoefficientFamily mul = CoefficientFamily::make(
      FamilyKind::diagonal_multiplicative, std::vector<double>(n, 0.7), {}, no_marks, q);
  const HypothesisAudit a_mul = audit_hypotheses(mul, no_marks, q, n, 1000, 6);
  CHECK(a_mul.pass);
  CHECK(a_mul.K_hat <= 0.49 + 1e-12);
  CHECK(mul.growth_K == doctest::Approx(0.49));

  const CoefficientFamily sat = CoefficientFamily::make(
      FamilyKind::saturated_multiplicative, s, amps, marks, q);
  const HypothesisAudit a_sat = audit_hypotheses(sat, marks, q, n, 1000, 7);
  CHECK(a_sat.pass);
  CHECK(a_sat.L_hat <= sat.lipschitz_L + 1e-12);
}

TEST_CASE("compensated jump integral has mean zero") {
  const int n = 3;
  const CovarianceQ q = CovarianceQ::make(std::vector<double>(n, 1.0));
  const MarkSpace marks = MarkSpace::make({"a", "b"}, {1.0, 0.5});
  const std::vector<ShellState> amps = {basis_state(n, 0, cplx(1.0, 0.0)),
                                        basis_state(n, 1, cplx(0.0, 2.0))};
  const double eps = 0.5, T = 1.0;
  ShellState drift = zero_state(n);
  for (int m = 0; m < marks.size(); ++m) axpy(drift, marks.weights[m], amps[m]);
  const ShellState dir = scaled(drift, 1.0 / h_norm(drift));
  const int runs = 10000;
  std::vector<double> vals(runs);
  for (int i = 0; i < runs; ++i) {
    RngStream rng = RngStream::derive(28, i, 0);
    const JumpLog log = sample_jump_times(T, marks, 1.0 / eps, nullptr, rng);
    ShellState value = scaled(drift, -T);  // compensator over [0, T]
    for (const auto& [t, m] : log.events) axpy(value, eps, amps[m]);
    vals[i] = h_inner(value, dir);
  }
  const MeanSE ms = mean_se(vals);
  CHECK(std::abs(ms.mean) <= 3.0 * ms.se);
}

TEST_CASE("identical seeds reproduce jump logs and increments bitwise") {
  const MarkSpace m = MarkSpace::make({"z"}, {3.0});
  const CovarianceQ q = CovarianceQ::make({1.0, 2.0});
  RngStream a = RngStream::derive(123, 9, 0);
  RngStream b = RngStream::derive(123, 9, 0);
  const JumpLog la = sample_jump_times(1.0, m, 2.0, nullptr, a);
  const JumpLog lb = sample_jump_times(1.0, m, 2.0, nullptr, b);
  CHECK(la.events == lb.events);
  RngStream c = RngStream::derive(123, 9, 1);
  RngStream d = RngStream::derive(123, 9, 1);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_wiener_increment(0.1, q, c) == sample_wiener_increment(0.1, q, d));
  }
}

TEST_CASE("thinning matches piecewise-constant window moments") {
  const MarkSpace m = MarkSpace::make({"z"}, {2.0});
  PiecewisePhi phi;
  phi.times = {0.0, 0.5};
  phi.values = {{0.5}, {2.0}};
  const int runs = 20000;
  std::vector<double> c1(runs, 0.0), c2(runs, 0.0);
  for (int i = 0; i < runs; ++i) {
    RngStream rng = RngStream::derive(2929, i, 0);
    const JumpLog log = sample_jump_times(1.0, m, 1.0, &phi, rng);
    for (const auto& [t, mk] : log.events) (t < 0.5 ? c1[i] : c2[i]) += 1.0;
  }
  const MeanSE m1 = mean_se(c1), m2 = mean_se(c2);
  CHECK(std::abs(m1.mean - 0.5) <= 3.0 * m1.se);   // 2 * 0.5 * 0.5
  CHECK(std::abs(m2.mean - 2.0) <= 3.0 * m2.se);   // 2 * 2.0 * 0.5
  double ss1 = 0.0, ss2 = 0.0;
  for (int i = 0; i < runs; ++i) {
    ss1 += (c1[i] - m1.mean) * (c1[i] - m1.mean);
    ss2 += (c2[i] - m2.mean) * (c2[i] - m2.mean);
  }
  CHECK(std::abs(ss1 / (runs - 1.0) - 0.5) <= 0.05);
  CHECK(std::abs(ss2 / (runs - 1.0) - 2.0) <= 0.15);
}
