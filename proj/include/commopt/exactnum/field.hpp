#pragma once

#include "commopt/exactnum/scalar.hpp"

#include <cstdint>
#include <stdexcept>

namespace commopt {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Residue of an arbitrary-precision integer in [0, p).
inline std::uint64_t reduce_mod(const BigInt& v, std::uint64_t p) {
  BigInt r;
  mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), p);
  return r.get_ui();
}

// Residue of a rational n/d as n * d^{-1} mod p. Throws when p divides d.
inline std::uint64_t reduce_mod(const Rational& q, std::uint64_t p) {
  std::uint64_t den = reduce_mod(BigInt(q.get_den()), p);
  if (den == 0) throw std::domain_error("denominator vanishes mod p");
  std::uint64_t num = reduce_mod(BigInt(q.get_num()), p);
  return mulmod(num, powmod(den, p - 2, p), p);
}

// Element of F_p for a prime p below 2^63.
class FieldScalar {
 public:
  FieldScalar(std::uint64_t value, std::uint64_t modulus) : value_(value % modulus), modulus_(modulus) {}

  std::uint64_t value() const { return value_; }
  std::uint64_t modulus() const { return modulus_; }
  bool is_zero() const { return value_ == 0; }

  FieldScalar operator+(FieldScalar o) const {
    check(o);
    std::uint64_t v = value_ + o.value_;
    if (v >= modulus_) v -= modulus_;
    return {v, modulus_};
  }
  FieldScalar operator-(FieldScalar o) const {
    check(o);
    return {value_ >= o.value_ ? value_ - o.value_ : value_ + modulus_ - o.value_, modulus_};
  }
  FieldScalar operator*(FieldScalar o) const {
    check(o);
    return {mulmod(value_, o.value_, modulus_), modulus_};
  }
  FieldScalar inverse() const {
    if (value_ == 0) throw std::domain_error("inverse of zero in F_p");
    return {powmod(value_, modulus_ - 2, modulus_), modulus_};
  }
  FieldScalar operator/(FieldScalar o) const { return *this * o.inverse(); }
  FieldScalar operator-() const { return {value_ == 0 ? 0 : modulus_ - value_, modulus_}; }

  friend bool operator==(FieldScalar a, FieldScalar b) {
    return a.value_ == b.value_ && a.modulus_ == b.modulus_;
  }

 private:
  void check(FieldScalar o) const {
    if (o.modulus_ != modulus_) throw std::invalid_argument("mixed moduli");
  }

  std::uint64_t value_;
  std::uint64_t modulus_;
};

}  // namespace commopt
