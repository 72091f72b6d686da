#pragma once

#include "commopt/exactnum/matrix.hpp"
#include "commopt/exactnum/scalar.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace commopt::lp {

enum class LpStatus { optimal, infeasible, unbounded };

template <class T>
struct NumTraits;

template <>
struct NumTraits<Rational> {
  static constexpr bool exact = true;
  static int sign(const Rational& v, const Rational& = Rational(0)) { return sgn(v); }
};

template <>
struct NumTraits<double> {
  static constexpr bool exact = false;
  static int sign(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }
};

// min c^T u  s.t.  M u = h,  lo <= u <= hi  (hi may be absent = +inf).
template <class T>
struct BoundedLp {
  Matrix<T> M;
  std::vector<T> h;
  std::vector<T> c;
  std::vector<T> lo;
  std::vector<std::optional<T>> hi;
};

template <class T>
struct SimplexResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<T> u;
  T objective = T(0);
  std::vector<T> pi;  // multipliers: reduced cost of column j is c_j - pi^T M_j
  std::size_t iterations = 0;
};

// Bounded-variable primal simplex on a dense tableau with an artificial
// phase 1. Exact arithmetic uses Bland's rule throughout; doubles use
// Dantzig pricing and drop to Bland after a run of degenerate pivots.
template <class T>
class BoundedSimplex {
  using Tr = NumTraits<T>;

 public:
  explicit BoundedSimplex(const BoundedLp<T>& lp) : lp_(lp) {
    m_ = lp.M.rows();
    n_ = lp.M.cols();
    if (lp.h.size() != m_ || lp.c.size() != n_ || lp.lo.size() != n_ || lp.hi.size() != n_)
      throw std::invalid_argument("simplex: dimension mismatch");
    for (std::size_t j = 0; j < n_; ++j)
      if (lp.hi[j] && *lp.hi[j] < lp.lo[j]) throw std::invalid_argument("simplex: empty bound interval");
    if constexpr (!Tr::exact) {
      double scale = 1.0;
      for (double v : lp.M.data()) scale = std::max(scale, std::abs(v));
      for (double v : lp.h) scale = std::max(scale, std::abs(v));
      tol_ = 1e-9 * scale;
      cost_tol_ = 1e-9;
      for (double v : lp.c) cost_tol_ = std::max(cost_tol_, 1e-9 * std::abs(v));
    }
  }

  SimplexResult<T> solve() {
    const std::size_t N = n_ + m_;
    lo_.assign(N, T(0));
    hi_.assign(N, std::nullopt);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp_.lo[j];
      hi_[j] = lp_.hi[j];
    }
    val_.assign(N, T(0));
    for (std::size_t j = 0; j < n_; ++j) val_[j] = lo_[j];
    sign_.assign(m_, 1);
    tab_.assign(m_, std::vector<T>(N, T(0)));
    beta_.assign(m_, T(0));
    basis_.assign(m_, 0);
    basic_.assign(N, false);
    for (std::size_t i = 0; i < m_; ++i) {
      T r = lp_.h[i];
      for (std::size_t j = 0; j < n_; ++j) r -= lp_.M(i, j) * lo_[j];
      sign_[i] = r < T(0) ? -1 : 1;
      for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = sign_[i] > 0 ? lp_.M(i, j) : T(-lp_.M(i, j));
      tab_[i][n_ + i] = T(1);
      beta_[i] = sign_[i] > 0 ? r : T(-r);
      basis_[i] = n_ + i;
      basic_[n_ + i] = true;
    }

    SimplexResult<T> res;
    std::vector<T> phase1(N, T(0));
    for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = T(1);
    if (!run(phase1, res.iterations)) throw std::logic_error("simplex: phase 1 cannot be unbounded");
    T infeas(0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeas += beta_[i];
    if (Tr::sign(infeas, tol_ * static_cast<double>(m_ + 1)) > 0) {
      res.status = LpStatus::infeasible;
      return res;
    }
    // Artificials are pinned at zero for phase 2.
    for (std::size_t k = 0; k < m_; ++k) {
      hi_[n_ + k] = T(0);
      if (!basic_[n_ + k]) val_[n_ + k] = T(0);
    }
    std::vector<T> phase2(N, T(0));
    for (std::size_t j = 0; j < n_; ++j) phase2[j] = lp_.c[j];
    if (!run(phase2, res.iterations)) {
      res.status = LpStatus::unbounded;
      return res;
    }
    res.status = LpStatus::optimal;
    res.u.assign(n_, T(0));
    for (std::size_t j = 0; j < n_; ++j) res.u[j] = val_[j];
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) res.u[basis_[i]] = beta_[i];
    for (std::size_t j = 0; j < n_; ++j) res.objective += lp_.c[j] * res.u[j];
    res.pi.assign(m_, T(0));
    for (std::size_t k = 0; k < m_; ++k) {
      T acc(0);
      for (std::size_t i = 0; i < m_; ++i) acc += phase2[basis_[i]] * tab_[i][n_ + k];
      res.pi[k] = sign_[k] > 0 ? acc : T(-acc);
    }
    return res;
  }

 private:
  // Returns false on unboundedness.
  bool run(const std::vector<T>& cost, std::size_t& iterations) {
    const std::size_t N = n_ + m_;
    const std::size_t limit = 200 * (N + m_) + 10000;
    std::size_t degenerate_run = 0;
    std::vector<T> dj(N);
    for (std::size_t it = 0;; ++it) {
      if (it > limit) throw std::runtime_error("simplex: iteration limit exceeded");
      for (std::size_t j = 0; j < N; ++j) {
        if (basic_[j]) continue;
        T acc = cost[j];
        for (std::size_t i = 0; i < m_; ++i) {
          if (tab_[i][j] != T(0)) acc -= cost[basis_[i]] * tab_[i][j];
        }
        dj[j] = acc;
      }
      const bool bland = Tr::exact || degenerate_run > 50;
      std::size_t enter = N;
      int dir = 0;
      T best(0);
      for (std::size_t j = 0; j < N; ++j) {
        if (basic_[j]) continue;
        if (hi_[j] && *hi_[j] == lo_[j]) continue;
        const int s = Tr::sign(dj[j], cost_tol_);
        const bool at_upper = hi_[j] && val_[j] == *hi_[j];
        int d = 0;
        if (s < 0 && !at_upper) d = 1;
        if (s > 0 && at_upper) d = -1;
        if (d == 0) continue;
        T mag = s < 0 ? T(-dj[j]) : dj[j];
        if (enter == N || (!bland && mag > best)) {
          enter = j;
          dir = d;
          best = mag;
          if (bland) break;
        }
      }
      if (enter == N) return true;

      // Ratio test.
      std::optional<T> step;
      std::size_t leave = m_;  // m_ means bound flip of the entering variable
      if (hi_[enter]) step = *hi_[enter] - lo_[enter];
      for (std::size_t i = 0; i < m_; ++i) {
        const T& a = tab_[i][enter];
        const int sa = Tr::sign(a, tol_ * 1e-3);
        if (sa == 0) continue;
        const std::size_t bv = basis_[i];
        // basic value moves by -dir * a * t
        std::optional<T> lim;
        if (dir * sa > 0) {
          lim = (beta_[i] - lo_[bv]) / (dir > 0 ? a : T(-a));
        } else if (hi_[bv]) {
          lim = (*hi_[bv] - beta_[i]) / (dir > 0 ? T(-a) : a);
        }
        if (!lim) continue;
        if (*lim < T(0)) *lim = T(0);
        if (!step || *lim < *step || (*lim == *step && (leave == m_ || bv < basis_[leave]))) {
          step = *lim;
          leave = i;
        }
      }
      if (!step) return false;
      ++iterations;
      const T t = *step;
      degenerate_run = (Tr::sign(t, tol_) == 0) ? degenerate_run + 1 : 0;
      const T move = dir > 0 ? t : T(-t);
      for (std::size_t i = 0; i < m_; ++i)
        if (tab_[i][enter] != T(0)) beta_[i] -= move * tab_[i][enter];
      const T entering_value = val_[enter] + move;
      if (leave == m_) {
        val_[enter] = entering_value;
        continue;
      }
      const std::size_t out = basis_[leave];
      // The leaving variable settles on the bound it hit.
      const T& a = tab_[leave][enter];
      const bool to_lower = (dir > 0) == (Tr::sign(a, 0.0) > 0);
      val_[out] = to_lower ? lo_[out] : *hi_[out];
      basic_[out] = false;
      basic_[enter] = true;
      basis_[leave] = enter;
      beta_[leave] = entering_value;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t col) {
    const std::size_t N = n_ + m_;
    const T p = tab_[r][col];
    for (std::size_t j = 0; j < N; ++j)
      if (tab_[r][j] != T(0)) tab_[r][j] /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const T f = tab_[i][col];
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < N; ++j)
        if (tab_[r][j] != T(0)) tab_[i][j] -= f * tab_[r][j];
      tab_[i][col] = T(0);
    }
  }

  const BoundedLp<T>& lp_;
  std::size_t m_ = 0, n_ = 0;
  double tol_ = 0.0;
  double cost_tol_ = 0.0;
  std::vector<T> lo_;
  std::vector<std::optional<T>> hi_;
  std::vector<T> val_;
  std::vector<int> sign_;
  std::vector<std::vector<T>> tab_;
  std::vector<T> beta_;
  std::vector<std::size_t> basis_;
  std::vector<bool> basic_;
};

template <class T>
SimplexResult<T> solve_bounded(const BoundedLp<T>& lp) {
  return BoundedSimplex<T>(lp).solve();
}

}  // namespace commopt::lp
