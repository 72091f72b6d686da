#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/network.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/exactnum/echelon.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace commopt::regression {

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

struct RegressionResult {
  std::string method;
  double eps = 0.0;
  double p = 2.0;
  std::optional<ExactVector> x_exact;
  std::vector<double> x;
  // The exact objective where one exists: ||Ax-b||_1 or ||Ax-b||_inf, and
  // the squared residual ||Ax-b||_2^2 for p = 2 (the norm itself is irrational).
  std::optional<Rational> objective_exact;
  double objective = 0.0;
  Transcript transcript;
  std::map<std::string, double> stats;

  void set_exact(ExactVector v) {
    x = to_doubles(v);
    x_exact = std::move(v);
  }

  ProtocolOutcome outcome() const {
    ProtocolOutcome o;
    o.status = Status::ok;
    o.x = x;
    o.x_exact = x_exact;
    o.objective_exact = objective_exact;
    o.objective = objective;
    o.transcript = transcript;
    o.stats = stats;
    auto it = stats.find("iterations");
    if (it != stats.end()) o.iterations = static_cast<std::uint64_t>(it->second);
    return o;
  }
};

inline void require_eps(double eps, const char* who) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument(std::string(who) + ": eps must lie in (0, 1)");
}

inline ExactVector exact_residual(const ExactMatrix& A, const ExactVector& b, const ExactVector& x) {
  ExactVector r = multiply(A, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Rational residual_l1_exact(const ExactMatrix& A, const ExactVector& b, const ExactVector& x) {
  Rational acc = 0;
  for (const auto& v : exact_residual(A, b, x)) acc += abs(v);
  return acc;
}

inline Rational residual_linf_exact(const ExactMatrix& A, const ExactVector& b, const ExactVector& x) {
  Rational best = 0;
  for (const auto& v : exact_residual(A, b, x)) best = std::max<Rational>(best, abs(v));
  return best;
}

inline Rational residual_l2sq_exact(const ExactMatrix& A, const ExactVector& b, const ExactVector& x) {
  Rational acc = 0;
  for (const auto& v : exact_residual(A, b, x)) acc += v * v;
  return acc;
}

// ||Ax - b||_p in long double; p = kInfNorm gives the max norm.
inline double residual_norm(const ExactMatrix& A, const ExactVector& b, const std::vector<double>& x, double p) {
  if (x.size() != A.cols()) throw std::invalid_argument("residual_norm: dimension mismatch");
  long double acc = 0.0L;
  for (std::size_t r = 0; r < A.rows(); ++r) {
    long double v = -static_cast<long double>(b[r].get_d());
    for (std::size_t c = 0; c < A.cols(); ++c) v += static_cast<long double>(A(r, c).get_d()) * x[c];
    v = std::fabs(v);
    if (std::isinf(p)) acc = std::max(acc, v);
    else if (p == 1.0) acc += v;
    else if (p == 2.0) acc += v * v;
    else acc += std::pow(v, static_cast<long double>(p));
  }
  if (std::isinf(p) || p == 1.0) return static_cast<double>(acc);
  if (p == 2.0) return static_cast<double>(std::sqrt(acc));
  return static_cast<double>(std::pow(acc, 1.0L / static_cast<long double>(p)));
}

inline double residual_norm(const Instance& inst, const std::vector<double>& x, double p) {
  return residual_norm(inst.A, inst.b, x, p);
}

// Per-server [A_i b_i].
inline std::vector<ExactMatrix> augmented_blocks(const Instance& inst) {
  std::vector<ExactMatrix> out;
  for (const auto& v : split_servers(inst)) {
    ExactMatrix m(v.size(), inst.d + 1);
    for (std::size_t r = 0; r < v.size(); ++r) {
      for (std::size_t c = 0; c < inst.d; ++c) m(r, c) = v.A(r, c);
      m(r, inst.d) = v.b[r];
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::pair<ExactMatrix, ExactVector> split_augmented(const ExactMatrix& aug) {
  const std::size_t d = aug.cols() - 1;
  ExactMatrix a(aug.rows(), d);
  ExactVector b(aug.rows());
  for (std::size_t r = 0; r < aug.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) a(r, c) = aug(r, c);
    b[r] = aug(r, d);
  }
  return {std::move(a), std::move(b)};
}

// Rows that are entirely zero contribute nothing to any residual norm.
inline ExactMatrix drop_zero_rows(const ExactMatrix& m) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0) {
        keep.push_back(r);
        break;
      }
    }
  }
  if (keep.empty()) return ExactMatrix(0, m.cols());
  return m.select_rows(keep);
}

namespace detail {

// Gram exchange: each server ships A_i^T A_i and A_i^T b_i; the coordinator
// returns the minimum-norm solution of the summed normal equations.
inline ExactVector gram_exchange(const std::vector<ExactMatrix>& aug, std::size_t d, Network& net) {
  ExactMatrix G(d, d, Rational(0));
  ExactVector h(d, Rational(0));
  for (std::size_t i = 0; i < aug.size(); ++i) {
    if (aug[i].rows() == 0) continue;
    auto [a, b] = split_augmented(aug[i]);
    ExactMatrix gi = gram(a);
    ExactVector hi = gram_rhs(a, b);
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "gram", Payload::matrix(gi, net.cost()));
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "moment", Payload::scalars(hi, net.cost()));
    for (std::size_t r = 0; r < d; ++r) {
      h[r] += hi[r];
      for (std::size_t c = 0; c < d; ++c) G(r, c) += gi(r, c);
    }
  }
  net.next_round();
  auto x = min_norm_solve(G, h);
  if (!x) throw std::logic_error("normal equations are always consistent");
  return *x;
}

}  // namespace detail

}  // namespace commopt::regression
