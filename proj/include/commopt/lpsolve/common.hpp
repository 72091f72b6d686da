#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/network.hpp"
#include "commopt/exactnum/matrix.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <stdexcept>
#include <vector>

namespace commopt::lp {

inline void require_objective(const Instance& inst) {
  inst.validate();
  if (!inst.c) throw std::invalid_argument("LP instance needs an objective c");
}

// The coordinator hands c to every server once, before the first round.
inline void distribute_objective(Network& net, const ExactVector& c) {
  std::vector<BigInt> v;
  for (const auto& q : c) v.push_back(q.get_num());
  net.broadcast(PartyId::coordinator(), "objective", Payload::integers(v, net.cost()));
}

// Constraint r as a primitive integer row (coefficients, then rhs).
inline std::vector<BigInt> integer_constraint(const Instance& inst, std::size_t r) {
  ExactVector full = inst.A.row_vector(r);
  full.push_back(inst.b[r]);
  return primitive_integer_row(full);
}

// Bit length that bounds every entry once constraints are scaled to
// primitive integers (and c to a primitive integer vector).
inline std::size_t integer_bits(const Instance& inst) {
  std::size_t bits = 1;
  for (std::size_t r = 0; r < inst.n; ++r)
    for (const auto& v : integer_constraint(inst, r)) bits = std::max(bits, bit_length(v));
  if (inst.c) {
    bool zero = true;
    for (const auto& q : *inst.c) zero = zero && q == 0;
    if (!zero)
      for (const auto& v : primitive_integer_row(*inst.c)) bits = std::max(bits, bit_length(v));
  }
  return bits;
}

// d! 2^{d bits}: bound on numerators and denominators of vertex coordinates.
inline BigInt cramer_bound(std::size_t d, std::size_t bits) {
  BigInt f = 1;
  for (std::size_t i = 2; i <= d; ++i) f *= static_cast<unsigned long>(i);
  return f << static_cast<mp_bitcnt_t>(d * bits);
}

// Rows of ||x||_inf <= B.
inline void append_box(ExactMatrix& A, ExactVector& b, std::size_t d, const Rational& B) {
  for (std::size_t j = 0; j < d; ++j) {
    for (int s : {1, -1}) {
      ExactVector row(d, Rational(0));
      row[j] = s;
      A.append_row(row);
      b.push_back(B);
    }
  }
}

inline bool violates(const ExactMatrix& A, const ExactVector& b, std::size_t r, const ExactVector& x) {
  Rational acc = 0;
  for (std::size_t j = 0; j < A.cols(); ++j) acc += A(r, j) * x[j];
  return acc > b[r];
}

inline bool satisfies_all(const Instance& inst, const ExactVector& x) {
  for (std::size_t r = 0; r < inst.n; ++r)
    if (violates(inst.A, inst.b, r, x)) return false;
  return true;
}

// A bounded LP never exceeds ||c||_1 times the Cramer bound; a boxed
// solution that does reveals an unbounded direction.
inline bool exceeds_vertex_bound(const ExactVector& c, const ExactVector& x, const BigInt& bound) {
  Rational c1 = 0;
  for (const auto& q : c) c1 += abs(q);
  return dot(c, x) > c1 * Rational(bound);
}

}  // namespace commopt::lp
