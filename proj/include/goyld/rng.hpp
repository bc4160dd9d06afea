#pragma once
// Counter-based random streams. Every draw is a pure function of
// (key, counter), so each trajectory gets an independent replayable stream
// derived from (master seed, trajectory index, lane). Distinct streams may
// run concurrently; a single stream must not be shared across threads.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace goyld {

namespace detail {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic sub-seed for tagged sub-experiments (ladder rungs, grid cells).
inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag) {
  return detail::mix64(master ^ (detail::kGamma * (tag + 0x9d5ull)));
}

class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream derive(std::uint64_t master_seed, std::uint64_t stream,
                          std::uint64_t lane = 0) {
    using detail::kGamma;
    using detail::mix64;
    std::uint64_t k = mix64(master_seed + kGamma);
    k = mix64(k ^ (kGamma * (stream + 0x51ull)));
    k = mix64(k ^ (0xc2b2ae3d27d4eb4full * (lane + 0x13ull)));
    return RngStream(k);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ ^ detail::mix64(counter_ * detail::kGamma + key_));
  }

  // uniform on (0,1), never hitting either endpoint
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_unit()));
    const double a = 2.0 * std::numbers::pi * next_unit();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // independent N(0,1) real and imaginary parts, so E|z|^2 = 2
  std::complex<double> next_complex_gaussian() {
    const double r = std::sqrt(-2.0 * std::log(next_unit()));
    const double a = 2.0 * std::numbers::pi * next_unit();
    return {r * std::cos(a), r * std::sin(a)};
  }

  double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace goyld
