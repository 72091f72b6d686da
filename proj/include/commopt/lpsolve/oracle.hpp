#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/exactnum/echelon.hpp"
#include "commopt/lpsolve/simplex.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace commopt::lp {

struct OracleResult {
  LpStatus status = LpStatus::infeasible;
  ExactVector x;
  Rational objective = 0;
  std::size_t bases_checked = 0;
};

using SizeGuardError = GuardError;

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

namespace detail {

// Exact integer arithmetic in __int128 that reports overflow instead of
// wrapping, and the same interface over BigInt where nothing can fail.
struct NarrowOps {
  using T = __int128;
  static bool mul(T a, T b, T& r) { return !__builtin_mul_overflow(a, b, &r); }
  static bool add(T a, T b, T& r) { return !__builtin_add_overflow(a, b, &r); }
  static bool sub(T a, T b, T& r) { return !__builtin_sub_overflow(a, b, &r); }
  static T from(const BigInt& v) { return static_cast<T>(v.get_si()); }
  static BigInt to_big(T v) {
    const bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    BigInt hi(static_cast<unsigned long>(u >> 64)), lo(static_cast<unsigned long>(u & ~0ULL));
    BigInt out = (hi << 64) + lo;
    return neg ? BigInt(-out) : out;
  }
};

struct WideOps {
  using T = BigInt;
  static bool mul(const T& a, const T& b, T& r) { r = a * b; return true; }
  static bool add(const T& a, const T& b, T& r) { r = a + b; return true; }
  static bool sub(const T& a, const T& b, T& r) { r = a - b; return true; }
  static T from(const BigInt& v) { return v; }
  static BigInt to_big(const T& v) { return v; }
};

// Bareiss determinant; false on overflow.
template <class Ops>
bool det_checked(std::vector<std::vector<typename Ops::T>> m, typename Ops::T& out) {
  using T = typename Ops::T;
  const std::size_t d = m.size();
  T prev = 1;
  bool negate = false;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    while (piv < d && m[piv][k] == 0) ++piv;
    if (piv == d) {
      out = 0;
      return true;
    }
    if (piv != k) {
      std::swap(m[piv], m[k]);
      negate = !negate;
    }
    for (std::size_t i = k + 1; i < d; ++i) {
      for (std::size_t j = k + 1; j < d; ++j) {
        T p, q, r;
        if (!Ops::mul(m[i][j], m[k][k], p) || !Ops::mul(m[i][k], m[k][j], q) || !Ops::sub(p, q, r)) return false;
        m[i][j] = r / prev;
      }
      m[i][k] = 0;
    }
    prev = m[k][k];
  }
  out = negate ? T(-prev) : prev;
  return true;
}

struct BasisEval {
  bool singular = false;
  bool feasible = false;
  bool dual_feasible = false;
  BigInt D;
  std::vector<BigInt> num;
};

// rows: primitive integer rows (a_i, b_i); c: objective scaled to integers.
template <class Ops>
std::optional<BasisEval> evaluate_basis(const std::vector<std::vector<typename Ops::T>>& rows,
                                        const std::vector<typename Ops::T>& c, const std::vector<std::size_t>& idx,
                                        bool want_dual) {
  using T = typename Ops::T;
  const std::size_t d = idx.size();
  std::vector<std::vector<T>> m(d, std::vector<T>(d));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t k = 0; k < d; ++k) m[r][k] = rows[idx[r]][k];
  BasisEval ev;
  T D;
  if (!det_checked<Ops>(m, D)) return std::nullopt;
  if (D == 0) {
    ev.singular = true;
    return ev;
  }
  // Cramer numerators: x_k = num_k / D.
  std::vector<T> num(d);
  for (std::size_t k = 0; k < d; ++k) {
    auto mk = m;
    for (std::size_t r = 0; r < d; ++r) mk[r][k] = rows[idx[r]][d];
    if (!det_checked<Ops>(std::move(mk), num[k])) return std::nullopt;
  }
  ev.feasible = true;
  for (std::size_t i = 0; i < rows.size() && ev.feasible; ++i) {
    T lhs = 0, rhs;
    for (std::size_t k = 0; k < d; ++k) {
      T p;
      if (!Ops::mul(rows[i][k], num[k], p) || !Ops::add(lhs, p, lhs)) return std::nullopt;
    }
    if (!Ops::mul(rows[i][d], D, rhs)) return std::nullopt;
    ev.feasible = D > 0 ? lhs <= rhs : lhs >= rhs;
  }
  if (want_dual) {
    // y^T A_B = c has y >= 0 iff every Cramer ratio det_k / D is >= 0.
    ev.dual_feasible = true;
    for (std::size_t k = 0; k < d && ev.dual_feasible; ++k) {
      std::vector<std::vector<T>> mt(d, std::vector<T>(d));
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < d; ++j) mt[r][j] = j == k ? c[r] : m[j][r];
      T dk;
      if (!det_checked<Ops>(std::move(mt), dk)) return std::nullopt;
      ev.dual_feasible = (dk == 0) || ((dk > 0) == (D > 0));
    }
  }
  ev.D = Ops::to_big(D);
  for (const auto& v : num) ev.num.push_back(Ops::to_big(v));
  return ev;
}

}  // namespace detail

inline BigInt factorial(std::size_t d) {
  BigInt f = 1;
  for (std::size_t i = 2; i <= d; ++i) f *= static_cast<unsigned long>(i);
  return f;
}

// Reference LP solver: max c^T x s.t. A x <= b by enumerating every basis of
// d rows. Rows are scaled to primitive integers so every vertex is N / D with
// D = det(A_B) and N from Cramer's rule; small entries run in checked
// 128-bit arithmetic and fall back to GMP on overflow. Among optimal
// vertices the lexicographically smallest wins. The LP is bounded iff c is a
// nonnegative combination of some d independent rows.
inline OracleResult lp_exact_oracle(const ExactMatrix& A, const ExactVector& b, const ExactVector& c,
                                    double max_bases = 1e6) {
  const std::size_t n = A.rows(), d = A.cols();
  if (b.size() != n || c.size() != d) throw std::invalid_argument("lp_exact_oracle: dimension mismatch");
  if (binomial(n, d) > max_bases) throw SizeGuardError("lp_exact_oracle: too many bases");
  if (n < d || rank_and_solve(A).rank != d) throw std::invalid_argument("lp_exact_oracle: A must have rank d");

  std::vector<std::vector<BigInt>> rows(n);
  std::size_t bits = 0;
  bool narrow = true;
  for (std::size_t i = 0; i < n; ++i) {
    ExactVector full = A.row_vector(i);
    full.push_back(b[i]);
    rows[i] = primitive_integer_row(full);
    for (const auto& v : rows[i]) {
      bits = std::max(bits, bit_length(v));
      narrow = narrow && mpz_fits_slong_p(v.get_mpz_t());
    }
  }
  std::vector<BigInt> cint(d, BigInt(0));
  bool czero = true;
  for (const auto& q : c) czero = czero && q == 0;
  if (!czero) cint = primitive_integer_row(c);
  for (const auto& v : cint) narrow = narrow && mpz_fits_slong_p(v.get_mpz_t());

  std::vector<std::vector<__int128>> rows128;
  std::vector<__int128> c128;
  if (narrow) {
    for (const auto& r : rows) {
      std::vector<__int128> v;
      for (const auto& e : r) v.push_back(detail::NarrowOps::from(e));
      rows128.push_back(std::move(v));
    }
    for (const auto& e : cint) c128.push_back(detail::NarrowOps::from(e));
  }
  const BigInt cramer = factorial(d) * (BigInt(1) << static_cast<mp_bitcnt_t>(d * bits));

  OracleResult out;
  bool feasible_any = false, bounded = false;
  std::optional<Rational> best;
  ExactVector best_x;
  std::vector<std::size_t> idx(d);
  for (std::size_t k = 0; k < d; ++k) idx[k] = k;
  while (true) {
    ++out.bases_checked;
    std::optional<detail::BasisEval> ev;
    if (narrow) ev = detail::evaluate_basis<detail::NarrowOps>(rows128, c128, idx, !bounded);
    if (!ev) ev = detail::evaluate_basis<detail::WideOps>(rows, cint, idx, !bounded);
    if (!ev->singular) {
      if (ev->feasible) {
        feasible_any = true;
        ExactVector x(d);
        for (std::size_t k = 0; k < d; ++k) {
          if (abs_int(ev->num[k]) > cramer || abs_int(ev->D) > cramer)
            throw std::logic_error("vertex exceeds the Cramer bound");
          x[k] = make_rational(ev->num[k], ev->D);
        }
        Rational val = dot(c, x);
        if (!best || val > *best || (val == *best && x < best_x)) {
          best = val;
          best_x = x;
        }
      }
      bounded = bounded || ev->dual_feasible;
    }
    std::size_t k = d;
    while (k > 0 && idx[k - 1] == n - d + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (!feasible_any) {
    out.status = LpStatus::infeasible;
  } else if (!bounded) {
    out.status = LpStatus::unbounded;
  } else {
    out.status = LpStatus::optimal;
    out.x = best_x;
    out.objective = *best;
  }
  return out;
}

inline OracleResult lp_exact_oracle(const Instance& inst, double max_bases = 1e6) {
  if (!inst.c) throw std::invalid_argument("lp_exact_oracle: instance has no objective");
  return lp_exact_oracle(inst.A, inst.b, *inst.c, max_bases);
}

}  // namespace commopt::lp
