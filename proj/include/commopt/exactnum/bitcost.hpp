#pragma once

#include "commopt/exactnum/scalar.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace commopt {

// Sign + minimal binary magnitude for integers, numerator/denominator pairs
// for rationals, and a fixed-width length header in front of every vector.
struct BitCostModel {
  std::uint64_t header_bits_per_length_field = 32;

  std::uint64_t integer(const BigInt& k) const {
    std::uint64_t magnitude = (k == 0) ? 1 : bit_length(k);
    return 1 + magnitude;
  }

  std::uint64_t integer(std::int64_t k) const { return integer(BigInt(static_cast<long>(k))); }

  std::uint64_t unsigned_integer(std::uint64_t k) const {
    std::uint64_t magnitude = 1;
    while (magnitude < 64 && (k >> magnitude) != 0) ++magnitude;
    return 1 + magnitude;
  }

  std::uint64_t rational(const Rational& q) const {
    return integer(BigInt(q.get_num())) + integer(BigInt(q.get_den()));
  }

  // A double crosses the wire as the exact dyadic rational it represents.
  std::uint64_t real(double v) const { return rational(from_double(v)); }

  std::uint64_t vector(std::span<const Rational> v) const {
    std::uint64_t bits = header_bits_per_length_field;
    for (const auto& q : v) bits += rational(q);
    return bits;
  }

  std::uint64_t integer_vector(std::span<const BigInt> v) const {
    std::uint64_t bits = header_bits_per_length_field;
    for (const auto& k : v) bits += integer(k);
    return bits;
  }

  std::uint64_t real_vector(std::span<const double> v) const {
    std::uint64_t bits = header_bits_per_length_field;
    for (double x : v) bits += real(x);
    return bits;
  }

  std::uint64_t verdict() const { return 1; }
};

// Free helper matching the single-integer cost rule.
inline std::uint64_t bit_cost_int(const BigInt& k) { return BitCostModel{}.integer(k); }
inline std::uint64_t bit_cost_int(long k) { return BitCostModel{}.integer(BigInt(k)); }

}  // namespace commopt
