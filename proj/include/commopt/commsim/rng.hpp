#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace commopt {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: draw k is mix64(key + k * golden). A stream is fully
// described by (key, counter), so substreams derived with split() do not
// depend on how many draws the parent has made.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  RngStream split(std::uint64_t tag) const {
    RngStream child;
    child.key_ = mix64(key_ ^ mix64(tag + 0x3c6ef372fe94f82bULL));
    return child;
  }

  // 53-bit uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe for log().
  double uniform_open0() { return 1.0 - uniform01(); }

  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
    std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    while (true) {
      std::uint64_t v = next_u64();
      if (v < limit) return v % bound;
    }
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == UINT64_MAX) return static_cast<std::int64_t>(next_u64());
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + uniform_below(span + 1));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  int sign() { return (next_u64() >> 63) ? 1 : -1; }

  // Box-Muller, one output per pair of uniforms.
  double normal() {
    double u1 = uniform_open0();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(uniform_open0()); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Tags for per-party substreams.
inline constexpr std::uint64_t kCoordinatorTag = 0;
inline std::uint64_t server_tag(std::size_t i) { return 0x1000 + i; }

}  // namespace commopt
