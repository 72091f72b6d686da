#pragma once

#include "commopt/exactnum/field.hpp"
#include "commopt/exactnum/matrix.hpp"
#include "commopt/exactnum/primes.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace commopt {

// Outcome of offering an equation <a, x> = beta to a maintained system.
enum class RowStatus { independent, dependent, inconsistent };

// Incremental fraction-free row echelon form over the integers for a system
// of equations with `dims` unknowns. Each stored row is a primitive integer
// vector (coefficients followed by the right-hand side); new rows are
// cross-multiplied against stored pivots and divided by their content, so
// entries stay bounded by minors of the input.
class ExactEchelon {
 public:
  explicit ExactEchelon(std::size_t dims) : dims_(dims) {}

  std::size_t dims() const { return dims_; }
  std::size_t rank() const { return rows_.size(); }

  RowStatus classify(const ExactVector& coeffs, const Rational& rhs) const {
    auto r = to_integer_row(coeffs, rhs);
    reduce(r);
    return status_of(r);
  }

  RowStatus insert(const ExactVector& coeffs, const Rational& rhs) {
    auto r = to_integer_row(coeffs, rhs);
    reduce(r);
    RowStatus st = status_of(r);
    if (st == RowStatus::independent) {
      std::size_t pivot = 0;
      while (r[pivot] == 0) ++pivot;
      rows_.push_back({std::move(r), pivot});
    }
    return st;
  }

  // A particular solution with free unknowns set to zero.
  ExactVector solve() const {
    ExactVector x(dims_, Rational(0));
    for (std::size_t k = rows_.size(); k-- > 0;) {
      const auto& row = rows_[k];
      Rational acc(row.values[dims_]);
      for (std::size_t j = 0; j < dims_; ++j) {
        if (j == row.pivot || row.values[j] == 0) continue;
        acc -= Rational(row.values[j]) * x[j];
      }
      x[row.pivot] = acc / Rational(row.values[row.pivot]);
    }
    return x;
  }

  std::vector<std::size_t> pivots() const {
    std::vector<std::size_t> out;
    for (const auto& r : rows_) out.push_back(r.pivot);
    return out;
  }

 private:
  struct Row {
    std::vector<BigInt> values;  // dims + 1 entries
    std::size_t pivot;
  };

  std::vector<BigInt> to_integer_row(const ExactVector& coeffs, const Rational& rhs) const {
    if (coeffs.size() != dims_) throw std::invalid_argument("echelon: dimension mismatch");
    ExactVector full(coeffs);
    full.push_back(rhs);
    return primitive_integer_row(full);
  }

  void reduce(std::vector<BigInt>& r) const {
    for (const auto& row : rows_) {
      const BigInt& rp = r[row.pivot];
      if (rp == 0) continue;
      BigInt g = gcd_int(row.values[row.pivot], rp);
      BigInt fa = row.values[row.pivot] / g;
      BigInt fb = rp / g;
      BigInt content = 0;
      for (std::size_t j = 0; j <= dims_; ++j) {
        r[j] = fa * r[j] - fb * row.values[j];
        content = gcd_int(content, r[j]);
      }
      if (content > 1) {
        for (auto& v : r) v /= content;
      }
    }
  }

  RowStatus status_of(const std::vector<BigInt>& r) const {
    for (std::size_t j = 0; j < dims_; ++j) {
      if (r[j] != 0) return RowStatus::independent;
    }
    return r[dims_] == 0 ? RowStatus::dependent : RowStatus::inconsistent;
  }

  std::size_t dims_;
  std::vector<Row> rows_;
};

// Reduced row echelon form over F_p, with the same interface shape as
// ExactEchelon. Rows are kept fully reduced so the annihilator of the stored
// augmented rows can be read off directly.
class ModEchelon {
 public:
  ModEchelon(std::size_t dims, std::uint64_t p) : dims_(dims), p_(p) {}

  std::size_t dims() const { return dims_; }
  std::uint64_t modulus() const { return p_; }
  std::size_t rank() const { return rows_.size(); }

  RowStatus classify(std::vector<std::uint64_t> r) const {
    check(r);
    reduce(r);
    return status_of(r);
  }

  RowStatus insert(std::vector<std::uint64_t> r) {
    check(r);
    reduce(r);
    RowStatus st = status_of(r);
    if (st != RowStatus::independent) return st;
    std::size_t pivot = 0;
    while (r[pivot] == 0) ++pivot;
    std::uint64_t inv = powmod(r[pivot], p_ - 2, p_);
    for (auto& v : r) v = mulmod(v, inv, p_);
    for (auto& row : rows_) {
      std::uint64_t f = row.values[pivot];
      if (f == 0) continue;
      for (std::size_t j = 0; j <= dims_; ++j) row.values[j] = sub(row.values[j], mulmod(f, r[j], p_));
    }
    rows_.push_back({std::move(r), pivot});
    return st;
  }

  // Inner product of an augmented row with a vector z in F_p^{dims+1}.
  std::uint64_t dot(const std::vector<std::uint64_t>& row, const std::vector<std::uint64_t>& z) const {
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < row.size(); ++j) acc = (acc + mulmod(row[j], z[j], p_)) % p_;
    return acc;
  }

  // Uniform element of the annihilator of the stored augmented rows: free
  // coordinates are drawn uniformly, pivot coordinates are then forced.
  template <class Rng>
  std::vector<std::uint64_t> random_annihilator(Rng& rng) const {
    std::vector<bool> is_pivot(dims_ + 1, false);
    for (const auto& row : rows_) is_pivot[row.pivot] = true;
    std::vector<std::uint64_t> z(dims_ + 1, 0);
    for (std::size_t j = 0; j <= dims_; ++j) {
      if (!is_pivot[j]) z[j] = rng.next_u64() % p_;
    }
    for (const auto& row : rows_) {
      std::uint64_t acc = 0;
      for (std::size_t j = 0; j <= dims_; ++j) {
        if (is_pivot[j]) continue;
        acc = (acc + mulmod(row.values[j], z[j], p_)) % p_;
      }
      z[row.pivot] = acc == 0 ? 0 : p_ - acc;
    }
    return z;
  }

  // Particular solution over F_p (free unknowns zero); only meaningful when
  // no stored row is inconsistent.
  std::vector<std::uint64_t> solve() const {
    std::vector<std::uint64_t> x(dims_, 0);
    for (const auto& row : rows_) {
      if (row.pivot < dims_) x[row.pivot] = row.values[dims_];
    }
    return x;
  }

 private:
  struct Row {
    std::vector<std::uint64_t> values;
    std::size_t pivot;
  };

  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + p_ - b; }

  void check(const std::vector<std::uint64_t>& r) const {
    if (r.size() != dims_ + 1) throw std::invalid_argument("mod echelon: dimension mismatch");
  }

  void reduce(std::vector<std::uint64_t>& r) const {
    for (auto& v : r) v %= p_;
    for (const auto& row : rows_) {
      std::uint64_t f = r[row.pivot];
      if (f == 0) continue;
      for (std::size_t j = 0; j <= dims_; ++j) r[j] = sub(r[j], mulmod(f, row.values[j], p_));
    }
  }

  RowStatus status_of(const std::vector<std::uint64_t>& r) const {
    for (std::size_t j = 0; j < dims_; ++j) {
      if (r[j] != 0) return RowStatus::independent;
    }
    return r[dims_] == 0 ? RowStatus::dependent : RowStatus::inconsistent;
  }

  std::size_t dims_;
  std::uint64_t p_;
  std::vector<Row> rows_;
};

// Reduces an equation with integer (or p-integral rational) entries mod p.
inline std::vector<std::uint64_t> reduce_equation_mod(const ExactVector& coeffs, const Rational& rhs,
                                                      std::uint64_t p) {
  std::vector<std::uint64_t> out;
  out.reserve(coeffs.size() + 1);
  for (const auto& q : coeffs) out.push_back(reduce_mod(q, p));
  out.push_back(reduce_mod(rhs, p));
  return out;
}

struct RankSolveResult {
  std::size_t rank = 0;
  std::vector<std::size_t> basis_rows;  // maximal independent row set, greedy in row order
  bool infeasible = false;
  std::optional<ExactVector> solution;  // set when b is given and the system is consistent
};

// Exact rank, greedy row basis and (optionally) a particular solution of Ax = b.
inline RankSolveResult rank_and_solve(const ExactMatrix& a, const std::optional<ExactVector>& b = std::nullopt) {
  if (a.rows() == 0) throw std::invalid_argument("rank_and_solve: empty matrix");
  if (b && b->size() != a.rows()) throw std::invalid_argument("rank_and_solve: dimension mismatch");
  ExactEchelon coeff_only(a.cols());
  ExactEchelon augmented(a.cols());
  RankSolveResult out;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    ExactVector row = a.row_vector(r);
    if (coeff_only.insert(row, Rational(0)) == RowStatus::independent) out.basis_rows.push_back(r);
    if (b && !out.infeasible) {
      if (augmented.insert(row, (*b)[r]) == RowStatus::inconsistent) out.infeasible = true;
    }
  }
  out.rank = coeff_only.rank();
  if (b && !out.infeasible) out.solution = augmented.solve();
  return out;
}

// Minimum-norm solution of a consistent system G x = h: keep a maximal
// independent row set G_B, then x = G_B^T (G_B G_B^T)^{-1} h_B. Returns
// nullopt when the system is inconsistent.
inline std::optional<ExactVector> min_norm_solve(const ExactMatrix& g, const ExactVector& h) {
  if (g.rows() == 0) return ExactVector(g.cols(), Rational(0));
  auto rs = rank_and_solve(g, h);
  if (rs.infeasible) return std::nullopt;
  if (rs.rank == 0) return ExactVector(g.cols(), Rational(0));
  ExactMatrix gb = g.select_rows(rs.basis_rows);
  ExactVector hb;
  for (auto r : rs.basis_rows) hb.push_back(h[r]);
  const std::size_t k = gb.rows();
  ExactMatrix gram_rows(k, k, Rational(0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      Rational acc = 0;
      for (std::size_t c = 0; c < gb.cols(); ++c) acc += gb(i, c) * gb(j, c);
      gram_rows(i, j) = acc;
      gram_rows(j, i) = acc;
    }
  auto z = rank_and_solve(gram_rows, hb).solution;
  ExactVector x(g.cols(), Rational(0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < g.cols(); ++c) x[c] += gb(i, c) * (*z)[i];
  return x;
}

// Rank over F_p after reducing every entry mod p. Entries must be integers.
inline std::size_t rank_mod_p(const ExactMatrix& a, std::uint64_t p) {
  if (p < 2 || !is_prime(p)) throw std::invalid_argument("rank_mod_p: modulus is not prime");
  ModEchelon e(a.cols(), p);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::vector<std::uint64_t> row;
    row.reserve(a.cols() + 1);
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (!is_integer(a(r, c))) throw std::invalid_argument("rank_mod_p: non-integer entry");
      row.push_back(reduce_mod(BigInt(a(r, c).get_num()), p));
    }
    row.push_back(0);
    e.insert(std::move(row));
  }
  return e.rank();
}

}  // namespace commopt
