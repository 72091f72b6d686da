#pragma once

#include "commopt/exactnum/field.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>

namespace commopt {

// Deterministic Miller-Rabin for the full 64-bit range.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  static constexpr std::array<std::uint64_t, 12> kWitnesses = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (std::uint64_t p : kWitnesses) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : kWitnesses) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Above 64 bits falls back to 40 probabilistic rounds.
inline bool is_prime(const BigInt& n) {
  if (n < 2) return false;
  if (mpz_fits_ulong_p(n.get_mpz_t())) return is_prime(static_cast<std::uint64_t>(n.get_ui()));
  return mpz_probab_prime_p(n.get_mpz_t(), 40) > 0;
}

// Unbiased integer in [lo, hi] from any source exposing next_u64().
template <class Rng>
std::uint64_t uniform_u64(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_u64: empty range");
  std::uint64_t span = hi - lo;
  if (span == UINT64_MAX) return rng.next_u64();
  std::uint64_t range = span + 1;
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  while (true) {
    std::uint64_t v = rng.next_u64();
    if (v < limit) return lo + v % range;
  }
}

// Uniform over primes in [2, hi] by rejection sampling.
template <class Rng>
std::uint64_t random_prime(std::uint64_t hi, Rng& rng) {
  if (hi < 2) throw std::invalid_argument("random_prime: hi must be >= 2");
  while (true) {
    std::uint64_t candidate = uniform_u64(rng, 2, hi);
    if (is_prime(candidate)) return candidate;
  }
}

// Default upper end of the prime range: (64 * d * max(L, 1))^exponent.
inline std::uint64_t default_prime_bound(std::size_t d, std::size_t bits, unsigned exponent = 2) {
  unsigned __int128 base = 64u * static_cast<unsigned __int128>(d ? d : 1) * (bits ? bits : 1);
  unsigned __int128 v = 1;
  for (unsigned i = 0; i < exponent; ++i) {
    v *= base;
    if (v > (static_cast<unsigned __int128>(1) << 62)) return std::uint64_t{1} << 62;
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace commopt
