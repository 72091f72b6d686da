#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace commopt {

// Arbitrary-precision integer and rational. gmpxx keeps mpq values in
// canonical form (gcd(|num|, den) = 1, den > 0) after every operator.
using BigInt = mpz_class;
using Rational = mpq_class;
using ExactVector = std::vector<Rational>;

inline Rational make_rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::domain_error("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline bool is_reduced(const Rational& q) {
  if (q.get_den() <= 0) return false;
  BigInt g;
  mpz_gcd(g.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return g == 1;
}

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline double to_double(const Rational& q) { return q.get_d(); }

// Exact: every finite double is a dyadic rational.
inline Rational from_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite double");
  Rational q;
  mpq_set_d(q.get_mpq_t(), v);
  return q;
}

inline std::string to_string(const BigInt& v) { return v.get_str(); }

inline std::string to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// Accepts "p", "-p", or "p/q".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  auto slash = s.find('/');
  auto parse_int = [](const std::string& part) {
    BigInt v;
    if (part.empty() || v.set_str(part, 10) != 0) {
      throw std::invalid_argument("not an integer: '" + part + "'");
    }
    return v;
  };
  if (slash == std::string::npos) return Rational(parse_int(s));
  return make_rational(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
}

inline BigInt abs_int(const BigInt& v) { return v < 0 ? BigInt(-v) : v; }

inline BigInt gcd_int(const BigInt& a, const BigInt& b) {
  BigInt g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

inline BigInt lcm_int(const BigInt& a, const BigInt& b) {
  BigInt l;
  mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return l;
}

// Number of bits in |v|; 0 for v = 0.
inline std::size_t bit_length(const BigInt& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline Rational dot(const ExactVector& a, const ExactVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  Rational acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline std::vector<double> to_doubles(const ExactVector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& q : v) out.push_back(q.get_d());
  return out;
}

// Scales a rational row to a primitive integer row with the same sign pattern.
inline std::vector<BigInt> primitive_integer_row(const ExactVector& row) {
  BigInt den = 1;
  for (const auto& q : row) den = lcm_int(den, q.get_den());
  std::vector<BigInt> out;
  out.reserve(row.size());
  BigInt g = 0;
  for (const auto& q : row) {
    BigInt v = q.get_num() * (den / q.get_den());
    g = gcd_int(g, v);
    out.push_back(std::move(v));
  }
  if (g > 1) {
    for (auto& v : out) v /= g;
  }
  return out;
}

}  // namespace commopt
