#pragma once

#include "commopt/lpsolve/lp.hpp"
#include "commopt/regression/common.hpp"
#include "commopt/rowsample/leverage.hpp"
#include "commopt/rowsample/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>

namespace commopt::regression {

inline const MessageSchema& l1_schema() {
  static const MessageSchema s = {
      {"rows", PayloadType::matrix},         {"sketch", PayloadType::matrix},    {"sample_mass", PayloadType::reals},
      {"sample_count", PayloadType::count},  {"sampled_rows", PayloadType::matrix},
  };
  return s;
}

struct L1OracleLimits {
  std::size_t max_rows = 2000;
  std::size_t max_cols = 8;
};

inline void finish_l1(RegressionResult& out, const ExactMatrix& A, const ExactVector& b, ExactVector x) {
  out.p = 1.0;
  out.objective_exact = residual_l1_exact(A, b, x);
  out.objective = out.objective_exact->get_d();
  out.set_exact(std::move(x));
}

namespace detail {

// Crossover: take the double-precision optimum, solve exactly on the d rows
// with the smallest residuals, and certify the point with an exact dual
// vector u, |u| <= 1, A^T u = 0, u_i = sign(r_i) off the zero set.
inline std::optional<ExactVector> l1_crossover(const ExactMatrix& A, const ExactVector& b) {
  const std::size_t n = A.rows(), d = A.cols();
  auto approx = lp::solve_l1(to_double_matrix(A), to_doubles(b));
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = -b[i].get_d();
    for (std::size_t c = 0; c < d; ++c) v += A(i, c).get_d() * approx.x[c];
    res[i] = std::abs(v);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto c) { return res[a] < res[c]; });
  ExactEchelon basis(d);
  std::vector<std::size_t> rows;
  for (auto r : order) {
    if (basis.rank() == d) break;
    if (basis.insert(A.row_vector(r), b[r]) == RowStatus::independent) rows.push_back(r);
  }
  if (basis.rank() < d) return std::nullopt;
  ExactVector x = basis.solve();
  ExactVector r = exact_residual(A, b, x);
  std::vector<bool> zero(n, false);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) zeros += zero[i] = r[i] == 0;
  if (zeros == n) return x;
  if (zeros != d) return std::nullopt;
  // A_B^T u_B = -sum_{i not in B} sign(r_i) A_i.
  ExactMatrix AtB(d, d);
  ExactVector rhs(d, Rational(0));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t c = 0; c < d; ++c) AtB(c, k) = A(rows[k], c);
  for (std::size_t i = 0; i < n; ++i) {
    if (zero[i]) continue;
    const int s = sgn(r[i]);
    for (std::size_t c = 0; c < d; ++c) rhs[c] -= s * A(i, c);
  }
  auto u = rank_and_solve(AtB, rhs).solution;
  if (!u) return std::nullopt;
  for (const auto& v : *u)
    if (abs(v) > 1) return std::nullopt;
  return x;
}

}  // namespace detail

// Exact l1 fit: double simplex plus an exact optimality certificate, with the
// exact bounded dual simplex as fallback.
inline ExactVector solve_l1_exact(const ExactMatrix& A, const ExactVector& b) {
  if (A.rows() == 0) return ExactVector(A.cols(), Rational(0));
  try {
    if (auto x = detail::l1_crossover(A, b)) return *x;
  } catch (const std::runtime_error&) {
  }
  return lp::solve_l1(A, b).x;
}

inline RegressionResult l1_exact_oracle(const ExactMatrix& A, const ExactVector& b, L1OracleLimits limits = {}) {
  if (A.rows() != b.size()) throw std::invalid_argument("l1_exact_oracle: dimension mismatch");
  if (A.rows() > limits.max_rows || A.cols() > limits.max_cols)
    throw GuardError("l1_exact_oracle: instance larger than the configured size guard");
  RegressionResult out;
  out.method = "l1-oracle";
  finish_l1(out, A, b, solve_l1_exact(A, b));
  return out;
}

inline RegressionResult l1_exact_oracle(const Instance& inst, L1OracleLimits limits = {}) {
  return l1_exact_oracle(inst.A, inst.b, limits);
}

inline std::size_t l1_sample_budget(std::size_t d, double eps, double C = 20.0) {
  const double dd = static_cast<double>(d);
  return static_cast<std::size_t>(std::ceil(C * dd * std::log2(dd + 1.0) / (eps * eps)));
}

struct L1SimpleConfig {
  double C = 20.0;
  std::size_t max_retries = 50;
  std::size_t net_factor = 8;  // random test directions per column of [A b]
  std::size_t lewis_iterations = 30;
};

struct LocalSketch {
  ExactMatrix rows;
  std::size_t attempts = 0;
  bool lossless = false;
  bool validated = false;
  double distortion = 0.0;
};

// Bernoulli-samples rows of [A_i b_i] by local Lewis weights and keeps
// resampling until every test direction z has ||S M z||_1 within (1 +- eps)
// of ||M z||_1. The test set is the coordinate axes, the local least-squares
// residual direction and net_factor * (d+1) Gaussian directions.
inline LocalSketch local_l1_sketch(const ExactMatrix& aug, double eps, std::size_t budget, RngStream rng,
                                   const L1SimpleConfig& cfg = {}) {
  LocalSketch out;
  if (aug.rows() <= budget) {
    out.rows = aug;
    out.lossless = true;
    out.validated = true;
    return out;
  }
  const std::size_t k = aug.cols();
  Eigen::MatrixXd M = rowsample::to_eigen(aug);
  auto w = rowsample::lewis_weights_local(M, cfg.lewis_iterations);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> p(w.size());
  for (std::size_t r = 0; r < w.size(); ++r)
    p[r] = rowsample::round_sampling_value(std::min(1.0, static_cast<double>(budget) * w[r] / wsum), rowsample::Norm::l1);

  std::vector<Eigen::VectorXd> tests;
  for (std::size_t j = 0; j < k; ++j) tests.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
  {
    Eigen::MatrixXd a = M.leftCols(static_cast<Eigen::Index>(k - 1));
    Eigen::VectorXd z(static_cast<Eigen::Index>(k));
    z.head(static_cast<Eigen::Index>(k - 1)) = a.colPivHouseholderQr().solve(M.col(static_cast<Eigen::Index>(k - 1)));
    z(static_cast<Eigen::Index>(k - 1)) = -1.0;
    tests.push_back(z);
  }
  for (std::size_t t = 0; t < cfg.net_factor * k; ++t) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    tests.push_back(z);
  }
  std::vector<Eigen::VectorXd> images;
  std::vector<double> norms;
  for (const auto& z : tests) {
    images.push_back(M * z);
    norms.push_back(images.back().lpNorm<1>());
  }

  double best = kInfNorm;
  for (std::size_t attempt = 1; attempt <= std::max<std::size_t>(cfg.max_retries, 1); ++attempt) {
    std::vector<std::size_t> picked;
    std::vector<double> scales;
    for (std::size_t r = 0; r < p.size(); ++r) {
      if (p[r] > 0.0 && rng.bernoulli(p[r])) {
        picked.push_back(r);
        scales.push_back(1.0 / p[r]);
      }
    }
    double worst = 0.0;
    for (std::size_t t = 0; t < tests.size(); ++t) {
      if (norms[t] == 0.0) continue;
      double acc = 0.0;
      for (std::size_t q = 0; q < picked.size(); ++q) acc += scales[q] * std::abs(images[t](static_cast<Eigen::Index>(picked[q])));
      worst = std::max(worst, std::abs(acc / norms[t] - 1.0));
    }
    if (worst < best) {
      best = worst;
      out.rows = rowsample::scaled_row_matrix(aug, picked, scales);
      if (picked.empty()) out.rows = ExactMatrix(0, k);
    }
    out.attempts = attempt;
    if (worst <= eps) {
      out.validated = true;
      break;
    }
  }
  out.distortion = best;
  return out;
}

namespace detail {

struct SketchSolve {
  ExactVector x;
  std::size_t rows = 0;
  std::size_t attempts = 0;
  std::size_t unvalidated = 0;
};

// Every server sketches its own [A_i b_i]; the coordinator solves the stack.
inline SketchSolve l1_sketch_exchange(const std::vector<ExactMatrix>& aug, double eps, Network& net, const RngStream& root,
                                      const L1SimpleConfig& cfg) {
  const std::size_t k = aug.empty() ? 1 : aug[0].cols();
  const std::size_t budget = l1_sample_budget(k - 1, eps, cfg.C);
  ExactMatrix stacked(0, k);
  SketchSolve out;
  for (std::size_t i = 0; i < aug.size(); ++i) {
    if (aug[i].rows() == 0) continue;
    auto sk = local_l1_sketch(aug[i], eps, budget, root.split(server_tag(i + 1)), cfg);
    out.attempts += sk.attempts;
    out.unvalidated += sk.validated ? 0 : 1;
    if (sk.rows.rows() == 0) continue;
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "sketch", Payload::matrix(sk.rows, net.cost()));
    for (std::size_t r = 0; r < sk.rows.rows(); ++r) stacked.append_row(sk.rows.row(r));
  }
  net.next_round();
  out.rows = stacked.rows();
  auto [sa, sb] = split_augmented(stacked);
  out.x = solve_l1_exact(sa, sb);
  return out;
}

}  // namespace detail

inline RegressionResult l1_simple(const Instance& inst, Mode mode, double eps, std::uint64_t seed = 0,
                                  const L1SimpleConfig& cfg = {}) {
  require_eps(eps, "l1_simple");
  inst.validate();
  Network net(mode, inst.s);
  auto aug = augmented_blocks(inst);
  for (auto& blk : aug) blk = drop_zero_rows(blk);
  auto solved = detail::l1_sketch_exchange(aug, eps, net, RngStream(seed), cfg);
  RegressionResult out;
  out.method = "l1-simple";
  out.eps = eps;
  out.stats["sketch_rows"] = static_cast<double>(solved.rows);
  out.stats["attempts"] = static_cast<double>(solved.attempts);
  out.stats["unvalidated_servers"] = static_cast<double>(solved.unvalidated);
  finish_l1(out, inst.A, inst.b, solved.x);
  out.transcript = net.finish();
  return out;
}

struct L1LewisConfig {
  double C = 20.0;
  rowsample::LewisConfig lewis;
};

// Every server ships its rows; used when the sample would not be smaller.
inline ExactMatrix gather_rows(const std::vector<ExactMatrix>& aug, Network& net) {
  const std::size_t k = aug.empty() ? 1 : aug[0].cols();
  ExactMatrix all(0, k);
  for (std::size_t i = 0; i < aug.size(); ++i) {
    if (aug[i].rows() == 0) continue;
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "rows", Payload::matrix(aug[i], net.cost()));
    for (std::size_t r = 0; r < aug[i].rows(); ++r) all.append_row(aug[i].row(r));
  }
  net.next_round();
  return all;
}

// Lewis weights of [A b] sum to its rank, so p_i = min(1, N w_i / (d+1)).
inline RegressionResult l1_lewis(const Instance& inst, Mode mode, double eps, std::uint64_t seed,
                                 const L1LewisConfig& cfg = {}) {
  require_eps(eps, "l1_lewis");
  inst.validate();
  const std::size_t d = inst.d;
  const std::size_t N = l1_sample_budget(d, eps, cfg.C);
  Network net(mode, inst.s);
  RegressionResult out;
  out.method = "l1-lewis";
  out.eps = eps;
  out.stats["budget"] = static_cast<double>(N);
  auto aug = augmented_blocks(inst);
  for (auto& blk : aug) blk = drop_zero_rows(blk);
  std::size_t live = 0;
  for (const auto& blk : aug) live += blk.rows();

  ExactMatrix rows;
  if (N >= live) {
    out.stats["fallback"] = 1;
    rows = gather_rows(aug, net);
  } else {
    out.stats["fallback"] = 0;
    RngStream root(seed);
    auto lw = rowsample::lewis_protocol(aug, d + 1, std::max<std::size_t>(inst.L, 1), net, root.split(0x13), cfg.lewis);
    std::vector<std::vector<double>> p(aug.size());
    for (std::size_t i = 0; i < aug.size(); ++i)
      for (double w : lw.weights[i])
        p[i].push_back(rowsample::round_sampling_value(
            std::min(1.0, static_cast<double>(N) * w / static_cast<double>(d + 1)), rowsample::Norm::l1));
    RngStream coord = root.split(kCoordinatorTag);
    std::vector<RngStream> servers;
    for (std::size_t i = 0; i < aug.size(); ++i) servers.push_back(root.split(server_tag(i + 1)));
    rows = rowsample::distributed_sample(aug, p, rowsample::Norm::l1, net, coord, servers, false).rows;
  }
  out.stats["sampled_rows"] = static_cast<double>(rows.rows());
  auto [sa, sb] = split_augmented(rows);
  finish_l1(out, inst.A, inst.b, solve_l1_exact(sa, sb));
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::regression
