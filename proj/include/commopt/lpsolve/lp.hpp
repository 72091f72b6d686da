#pragma once

#include "commopt/lpsolve/simplex.hpp"

#include <optional>
#include <vector>

namespace commopt::lp {

template <class T>
struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<T> x;
  T objective = T(0);
  std::size_t iterations = 0;
};

template <class T>
Matrix<T> transpose_of(const Matrix<T>& a) {
  return a.transpose();
}

// max c^T x  s.t.  A x <= b, x free. Solved through the dual
// min b^T y, A^T y = c, y >= 0, whose multipliers are the primal x.
template <class T>
LpResult<T> solve_lp_max(const Matrix<T>& A, const std::vector<T>& b, const std::vector<T>& c) {
  const std::size_t n = A.rows(), d = A.cols();
  if (b.size() != n || c.size() != d) throw std::invalid_argument("solve_lp_max: dimension mismatch");
  BoundedLp<T> dual;
  dual.M = A.transpose();
  dual.h = c;
  dual.c = b;
  dual.lo.assign(n, T(0));
  dual.hi.assign(n, std::nullopt);
  auto res = solve_bounded(dual);
  LpResult<T> out;
  out.iterations = res.iterations;
  if (res.status == LpStatus::optimal) {
    out.status = LpStatus::optimal;
    out.x = res.pi;
    for (std::size_t j = 0; j < d; ++j) out.objective += c[j] * out.x[j];
    return out;
  }
  if (res.status == LpStatus::unbounded) {
    out.status = LpStatus::infeasible;
    return out;
  }
  // Dual infeasible: primal is infeasible or unbounded. Farkas: A x <= b is
  // infeasible iff some y >= 0 has A^T y = 0 and b^T y < 0.
  BoundedLp<T> farkas = dual;
  farkas.h.assign(d, T(0));
  farkas.hi.assign(n, T(1));
  auto f = solve_bounded(farkas);
  out.iterations += f.iterations;
  out.status = NumTraits<T>::sign(f.objective, NumTraits<T>::exact ? 0.0 : 1e-9) < 0 ? LpStatus::infeasible
                                                                                      : LpStatus::unbounded;
  return out;
}

// Lexicographic maximization of objs[0], objs[1], ... : each stage keeps the
// optimal face of the previous ones. Later stages that are unbounded on that
// face are skipped. The status is that of the first stage.
template <class T>
LpResult<T> solve_lp_lexobj(const Matrix<T>& A, const std::vector<T>& b, const std::vector<std::vector<T>>& objs) {
  if (objs.empty()) throw std::invalid_argument("solve_lp_lexobj: no objective");
  auto first = solve_lp_max(A, b, objs[0]);
  if (first.status != LpStatus::optimal) return first;
  const std::size_t d = A.cols();
  Matrix<T> a2 = A;
  std::vector<T> b2 = b;
  auto fix = [&](const std::vector<T>& o, const T& v) {
    std::vector<T> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = -o[j];
    a2.append_row(row);
    b2.push_back(-v);
  };
  fix(objs[0], first.objective);
  LpResult<T> cur = first;
  for (std::size_t k = 1; k < objs.size(); ++k) {
    bool zero = true;
    for (const auto& v : objs[k]) zero = zero && v == T(0);
    if (zero) continue;
    auto r = solve_lp_max(a2, b2, objs[k]);
    cur.iterations += r.iterations;
    if (r.status != LpStatus::optimal) continue;
    cur.x = r.x;
    fix(objs[k], r.objective);
  }
  cur.objective = T(0);
  for (std::size_t j = 0; j < d; ++j) cur.objective += objs[0][j] * cur.x[j];
  return cur;
}

// Maximize c, then break ties toward the lexicographically smallest x.
template <class T>
std::vector<std::vector<T>> lex_objectives(const std::vector<T>& c) {
  std::vector<std::vector<T>> objs{c};
  for (std::size_t k = 0; k < c.size(); ++k) {
    std::vector<T> o(c.size(), T(0));
    o[k] = T(-1);
    objs.push_back(std::move(o));
  }
  return objs;
}

template <class T>
LpResult<T> solve_lp_max_lex(const Matrix<T>& A, const std::vector<T>& b, const std::vector<T>& c) {
  return solve_lp_lexobj(A, b, lex_objectives(c));
}

// min ||A x - b||_1 via the dual max b^T u, A^T u = 0, -1 <= u <= 1.
template <class T>
LpResult<T> solve_l1(const Matrix<T>& A, const std::vector<T>& b) {
  const std::size_t n = A.rows(), d = A.cols();
  if (b.size() != n) throw std::invalid_argument("solve_l1: dimension mismatch");
  BoundedLp<T> dual;
  dual.M = A.transpose();
  dual.h.assign(d, T(0));
  dual.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) dual.c[i] = -b[i];
  dual.lo.assign(n, T(-1));
  dual.hi.assign(n, T(1));
  auto res = solve_bounded(dual);
  if (res.status != LpStatus::optimal) throw std::logic_error("solve_l1: dual must be optimal");
  LpResult<T> out;
  out.status = LpStatus::optimal;
  out.iterations = res.iterations;
  out.x.resize(d);
  for (std::size_t j = 0; j < d; ++j) out.x[j] = -res.pi[j];
  for (std::size_t i = 0; i < n; ++i) {
    T r = -b[i];
    for (std::size_t j = 0; j < d; ++j) r += A(i, j) * out.x[j];
    out.objective += r < T(0) ? T(-r) : r;
  }
  return out;
}

}  // namespace commopt::lp
