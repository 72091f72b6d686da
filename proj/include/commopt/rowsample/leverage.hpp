#pragma once

#include "commopt/rowsample/sampling.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <vector>

namespace commopt::rowsample {

inline constexpr double kInfiniteScore = std::numeric_limits<double>::infinity();

// Generalized leverage scores of the rows of A with respect to B, in double
// precision. Rows with a component outside the row space of B score +inf.
inline std::vector<double> leverage_double(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<double> out(static_cast<std::size_t>(a.rows()), 0.0);
  if (b.rows() == 0) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[static_cast<std::size_t>(i)] = a.row(i).norm() > 0 ? kInfiniteScore : 0.0;
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() ? sv(0) * 1e-10 * static_cast<double>(std::max(b.rows(), b.cols())) : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Eigen::VectorXd row = a.row(i).transpose();
    Eigen::VectorXd coef = v.transpose() * row;
    double residual = (row - v * coef).norm();
    if (residual > 1e-8 * std::max(1.0, row.norm())) {
      out[static_cast<std::size_t>(i)] = kInfiniteScore;
      continue;
    }
    double t = 0.0;
    for (Eigen::Index k = 0; k < rank; ++k) t += (coef(k) / sv(k)) * (coef(k) / sv(k));
    out[static_cast<std::size_t>(i)] = t;
  }
  return out;
}

struct LeverageConfig {
  double c0 = 4.0;  // base case when n <= c0 * d * ceil(log2(d + 1))
  double C = 20.0;  // oversampling constant
};

struct LeverageResult {
  ExactMatrix reduced;                            // the shared spectral approximation
  std::vector<std::vector<double>> scores;        // tau^{reduced}(A), per server
  std::vector<std::vector<double>> step_scores;   // sampling scores of the top level
  std::size_t levels = 0;
};

inline std::size_t leverage_threshold(std::size_t d, const LeverageConfig& cfg) {
  return static_cast<std::size_t>(cfg.c0 * static_cast<double>(d) * std::ceil(std::log2(static_cast<double>(d) + 1.0)));
}

namespace detail {

inline std::vector<std::vector<double>> local_scores(const std::vector<ExactMatrix>& blocks, const ExactMatrix& ref) {
  Eigen::MatrixXd r = to_eigen(ref);
  std::vector<std::vector<double>> out;
  for (const auto& b : blocks) out.push_back(b.rows() ? leverage_double(to_eigen(b), r) : std::vector<double>{});
  return out;
}

// Every server ships its rows; the coordinator forwards the stack.
inline ExactMatrix gather_all(const std::vector<ExactMatrix>& blocks, std::size_t d, Network& net) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].rows()) net.send(PartyId::server(i + 1), PartyId::coordinator(), "rows", Payload::matrix(blocks[i], net.cost()));
  net.next_round();
  ExactMatrix all = stack(blocks, d);
  if (net.mode() == Mode::coordinator) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      net.send(PartyId::coordinator(), PartyId::server(i + 1), "rows", Payload::matrix(all, net.cost()));
    net.next_round();
  }
  return all;
}

struct Level {
  ExactMatrix reduced;
  std::vector<std::vector<double>> step_scores;
  std::size_t depth = 0;
};

inline Level recurse(const std::vector<ExactMatrix>& blocks, std::size_t d, Network& net, const RngStream& rng,
                     const LeverageConfig& cfg, std::size_t depth) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.rows();
  Level out;
  out.depth = depth;
  if (n <= leverage_threshold(d, cfg)) {
    out.reduced = gather_all(blocks, d, net);
    out.step_scores = local_scores(blocks, out.reduced);
    return out;
  }

  // Each server keeps a uniform half of its rows.
  std::vector<ExactMatrix> halves;
  std::vector<std::vector<bool>> kept;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    RngStream local = rng.split(server_tag(i + 1)).split(depth);
    const std::size_t ni = blocks[i].rows();
    std::size_t take = ni / 2 + ((ni % 2) && local.bernoulli(0.5) ? 1 : 0);
    std::vector<std::size_t> order(ni);
    std::iota(order.begin(), order.end(), 0);
    local.shuffle(order);
    order.resize(take);
    std::sort(order.begin(), order.end());
    std::vector<bool> mask(ni, false);
    for (auto r : order) mask[r] = true;
    kept.push_back(mask);
    ExactMatrix half = blocks[i].select_rows(order);
    if (order.empty()) half = ExactMatrix(0, d);
    halves.push_back(std::move(half));
  }
  Level inner = recurse(halves, d, net, rng, cfg, depth + 1);
  out.depth = inner.depth;

  auto tau = local_scores(blocks, inner.reduced);
  std::vector<std::vector<double>> p(blocks.size());
  double total = 0.0;
  const double logd = std::max(std::log2(static_cast<double>(d)), 1.0);
  out.step_scores.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t r = 0; r < tau[i].size(); ++r) {
      double t = tau[i][r];
      double tt;
      if (std::isinf(t)) tt = 1.0;
      else if (kept[i][r]) tt = std::min(t, 1.0);
      else tt = t > 0 ? std::min(1.0 / (1.0 + 1.0 / t), 1.0) : 0.0;
      out.step_scores[i].push_back(tt);
      p[i].push_back(round_sampling_value(cfg.C * tt * logd, Norm::l2));
      total += p[i].back();
    }
  }
  if (std::ceil(total - 1e-9) >= static_cast<double>(n)) {
    // The sample would be at least as large as the data: ship the data.
    out.reduced = gather_all(blocks, d, net);
    return out;
  }
  RngStream coord = rng.split(kCoordinatorTag).split(depth);
  std::vector<RngStream> servers;
  for (std::size_t i = 0; i < blocks.size(); ++i) servers.push_back(rng.split(server_tag(i + 1)).split(1000 + depth));
  out.reduced = distributed_sample(blocks, p, Norm::l2, net, coord, servers, true).rows;
  return out;
}

}  // namespace detail

// Recursive halving: sample half the rows, approximate the half, use it to
// score every row, then sample by those scores.
inline LeverageResult leverage_protocol(const std::vector<ExactMatrix>& blocks, std::size_t d, Network& net,
                                        const RngStream& rng, const LeverageConfig& cfg = {}) {
  auto level = detail::recurse(blocks, d, net, rng, cfg, 0);
  LeverageResult out;
  out.reduced = std::move(level.reduced);
  out.step_scores = std::move(level.step_scores);
  out.levels = level.depth + 1;
  out.scores = detail::local_scores(blocks, out.reduced);
  return out;
}

struct LewisConfig {
  std::size_t iterations = 0;  // 0 picks ceil(log2 log2 max(n, 4)) + 3
  double c1 = 1.0;             // clamp exponent B = c1 * L * ceil(log2(n d))
  LeverageConfig leverage;
};

struct LewisResult {
  std::vector<std::vector<double>> weights;  // per server
  std::size_t iterations = 0;
  std::vector<double> min_weight_per_iteration;
  std::vector<double> max_weight_per_iteration;
};

inline std::size_t default_lewis_iterations(std::size_t n) {
  const double nn = static_cast<double>(std::max<std::size_t>(n, 4));
  return static_cast<std::size_t>(std::ceil(std::log2(std::log2(nn)))) + 3;
}

// w <- sqrt(w * tau(W^{-1/2} A)). The matrix handed to the leverage protocol
// uses integer scales round(w^{-1/2}) so its entries stay short.
inline LewisResult lewis_protocol(const std::vector<ExactMatrix>& blocks, std::size_t d, std::size_t L, Network& net,
                                  const RngStream& rng, const LewisConfig& cfg = {}) {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    n += b.rows();
    for (std::size_t r = 0; r < b.rows(); ++r) {
      bool nonzero = false;
      for (std::size_t c = 0; c < b.cols(); ++c) nonzero = nonzero || b(r, c) != 0;
      if (!nonzero) throw std::invalid_argument("lewis_protocol: row of zeros");
    }
  }
  const std::size_t T = cfg.iterations ? cfg.iterations : default_lewis_iterations(n);
  const double B = cfg.c1 * static_cast<double>(std::max<std::size_t>(L, 1)) *
                   std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n * d, 2))));
  const double floor_w = std::exp2(-std::min(B, 1000.0));

  LewisResult out;
  out.iterations = T;
  out.weights.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) out.weights[i].assign(blocks[i].rows(), 1.0);

  for (std::size_t t = 0; t < T; ++t) {
    std::vector<ExactMatrix> scaled;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      ExactMatrix m = blocks[i];
      for (std::size_t r = 0; r < m.rows(); ++r) {
        long k = std::max(1L, std::lround(1.0 / std::sqrt(out.weights[i][r])));
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) *= k;
      }
      scaled.push_back(std::move(m));
    }
    auto lev = leverage_protocol(scaled, d, net, rng.split(0x1e3 + t), cfg.leverage);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      for (std::size_t r = 0; r < blocks[i].rows(); ++r) {
        double tau = std::min(lev.scores[i][r], 1.0);
        double w = std::sqrt(out.weights[i][r] * tau);
        w = std::clamp(w, floor_w, 1.0);
        out.weights[i][r] = w;
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
    }
    out.min_weight_per_iteration.push_back(lo);
    out.max_weight_per_iteration.push_back(hi);
  }
  return out;
}

// Local (single-party) Lewis weights by the same fixed-point iteration with
// exact double scaling; used by servers that sketch their own rows.
inline std::vector<double> lewis_weights_local(const Eigen::MatrixXd& a, std::size_t iterations = 30) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<double> w(n, 1.0);
  for (std::size_t t = 0; t < iterations; ++t) {
    Eigen::MatrixXd scaled = a;
    for (std::size_t i = 0; i < n; ++i) scaled.row(static_cast<Eigen::Index>(i)) /= std::sqrt(w[i]);
    auto tau = leverage_double(scaled, scaled);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::clamp(std::sqrt(w[i] * std::min(tau[i], 1.0)), 1e-300, 1.0);
  }
  return w;
}

}  // namespace commopt::rowsample
