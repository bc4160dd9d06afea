#pragma once
// Shared helpers: worker pool, content hashing, confidence intervals and
// small statistics used by the Monte Carlo layers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace goyld {

// Worker count for ensemble parallelism. 0 requests the default
// (GOYLD_THREADS when set, otherwise the hardware concurrency).
void set_worker_threads(int n);
int worker_threads();

// Runs body(0..n-1) on the worker pool. Callers store per-index results and
// reduce serially afterwards, so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

struct WilsonCI {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonCI wilson_ci(std::size_t hits, std::size_t n, double z = 1.96);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanSE mean_se(const std::vector<double>& v);

double percentile(std::vector<double> v, double p);  // p in [0,100]

// weighted least squares fit y = a + b x; returns {a, b}
std::pair<double, double> wls_fit(const std::vector<double>& x,
                                  const std::vector<double>& y,
                                  const std::vector<double>& w);

std::string format_double(double v);  // round-trip decimal form

}  // namespace goyld
