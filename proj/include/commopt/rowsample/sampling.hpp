#pragma once

#include "commopt/commsim/network.hpp"
#include "commopt/commsim/rng.hpp"
#include "commopt/exactnum/matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace commopt::rowsample {

enum class Norm { l1, l2 };

// Per-row sampling values. Row i is drawn with probability p_i / sum(p) and
// rescaled by p_i^{-1/2} (l2) or p_i^{-1} (l1); N = ceil(sum(p)) draws.
struct SamplingPlan {
  std::vector<double> p;
  Norm norm = Norm::l2;

  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
  std::size_t rows() const { return static_cast<std::size_t>(std::ceil(total() - 1e-9)); }

  double scale(std::size_t i) const { return norm == Norm::l2 ? 1.0 / std::sqrt(p[i]) : 1.0 / p[i]; }
};

inline constexpr int kMinScaleExp = -40;
inline constexpr int kMaxScaleExp = 40;

// Raises each p_i so that its rescale factor becomes a power of two. Rounding
// only ever increases p_i.
inline double round_sampling_value(double p, Norm norm) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("sampling value must be finite and >= 0");
  if (p == 0.0) return 0.0;
  const double scale = norm == Norm::l2 ? 1.0 / std::sqrt(p) : 1.0 / p;
  int e = static_cast<int>(std::floor(std::log2(scale)));
  // Guard against log2 landing one ulp high.
  if (std::ldexp(1.0, e) > scale) --e;
  e = std::clamp(e, kMinScaleExp, kMaxScaleExp);
  const double s = std::ldexp(1.0, e);
  return norm == Norm::l2 ? 1.0 / (s * s) : 1.0 / s;
}

inline SamplingPlan make_plan(const std::vector<double>& raw, Norm norm) {
  SamplingPlan plan;
  plan.norm = norm;
  plan.p.reserve(raw.size());
  for (double v : raw) plan.p.push_back(round_sampling_value(v, norm));
  return plan;
}

// One nonzero per row: row r of S is scale[r] * e_{index[r]}.
struct Sampler {
  std::vector<std::size_t> index;
  std::vector<double> scale;
  std::size_t cols = 0;

  std::size_t rows() const { return index.size(); }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows(); ++r) s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(index[r])) = scale[r];
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& a) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows()), a.cols());
    for (std::size_t r = 0; r < rows(); ++r) out.row(static_cast<Eigen::Index>(r)) = scale[r] * a.row(static_cast<Eigen::Index>(index[r]));
    return out;
  }
};

// Inverse-CDF draw; entries with zero weight are never returned.
inline std::size_t draw_index(const std::vector<double>& cumulative, RngStream& rng) {
  const double u = rng.uniform01() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) it = std::lower_bound(cumulative.begin(), cumulative.end(), cumulative.back());
  return static_cast<std::size_t>(it - cumulative.begin());
}

inline std::vector<double> cumulative_sums(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

inline Sampler build_sampler(const SamplingPlan& plan, std::uint64_t seed) {
  const double total = plan.total();
  if (!(total > 0.0)) throw std::invalid_argument("build_sampler: sum of sampling values is zero");
  RngStream rng(seed);
  auto cum = cumulative_sums(plan.p);
  Sampler s;
  s.cols = plan.p.size();
  const std::size_t N = plan.rows();
  for (std::size_t r = 0; r < N; ++r) {
    std::size_t i = draw_index(cum, rng);
    s.index.push_back(i);
    s.scale.push_back(plan.scale(i));
  }
  return s;
}

inline Eigen::MatrixXd to_eigen(const ExactMatrix& a) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c).get_d();
  return m;
}

inline ExactMatrix scaled_row_matrix(const ExactMatrix& a, const std::vector<std::size_t>& rows, const std::vector<double>& scales) {
  ExactMatrix out(rows.size(), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Rational f = from_double(scales[k]);
    for (std::size_t c = 0; c < a.cols(); ++c) out(k, c) = a(rows[k], c) * f;
  }
  return out;
}

inline ExactMatrix stack(const std::vector<ExactMatrix>& blocks, std::size_t cols) {
  ExactMatrix out(0, cols);
  for (const auto& b : blocks)
    for (std::size_t r = 0; r < b.rows(); ++r) out.append_row(b.row(r));
  return out;
}

struct DistributedSample {
  // Rows held by the coordinator after sampling, already rescaled.
  ExactMatrix rows;
  std::vector<std::size_t> server;  // 1-based owner of each sampled row
  std::vector<std::size_t> local;   // index inside the owner's block
  std::vector<double> scale;
};

// Servers report sum(p) over their rows, the coordinator splits the N draws
// across servers with a multinomial, each server draws its share locally and
// ships the rescaled rows. With share_back, the coordinator then forwards the
// sample to every server (implicit on a blackboard).
inline DistributedSample distributed_sample(const std::vector<ExactMatrix>& blocks,
                                            const std::vector<std::vector<double>>& p, Norm norm, Network& net,
                                            RngStream& coord, std::vector<RngStream>& servers, bool share_back,
                                            const std::string& kind = "sampled_rows") {
  const std::size_t s = blocks.size();
  const std::size_t cols = s ? blocks[0].cols() : 0;
  std::vector<double> sums(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    sums[i] = std::accumulate(p[i].begin(), p[i].end(), 0.0);
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "sample_mass", Payload::real(sums[i], net.cost()));
  }
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("distributed_sample: no sampling mass");
  const std::size_t N = static_cast<std::size_t>(std::ceil(total - 1e-9));
  std::vector<std::size_t> counts(s, 0);
  auto cum = cumulative_sums(sums);
  for (std::size_t k = 0; k < N; ++k) ++counts[draw_index(cum, coord)];
  for (std::size_t i = 0; i < s; ++i)
    net.send(PartyId::coordinator(), PartyId::server(i + 1), "sample_count", Payload::count(counts[i], net.cost()));
  net.next_round();

  DistributedSample out;
  out.rows = ExactMatrix(0, cols);
  SamplingPlan plan;
  plan.norm = norm;
  for (std::size_t i = 0; i < s; ++i) {
    if (counts[i] == 0) continue;
    plan.p = p[i];
    auto lc = cumulative_sums(p[i]);
    std::vector<std::size_t> picked;
    std::vector<double> scales;
    for (std::size_t k = 0; k < counts[i]; ++k) {
      std::size_t r = draw_index(lc, servers[i]);
      picked.push_back(r);
      scales.push_back(plan.scale(r));
    }
    ExactMatrix mine = scaled_row_matrix(blocks[i], picked, scales);
    net.send(PartyId::server(i + 1), PartyId::coordinator(), kind, Payload::matrix(mine, net.cost()));
    for (std::size_t k = 0; k < picked.size(); ++k) {
      out.rows.append_row(mine.row(k));
      out.server.push_back(i + 1);
      out.local.push_back(picked[k]);
      out.scale.push_back(scales[k]);
    }
  }
  net.next_round();
  if (share_back && net.mode() == Mode::coordinator) {
    for (std::size_t i = 0; i < s; ++i)
      net.send(PartyId::coordinator(), PartyId::server(i + 1), kind, Payload::matrix(out.rows, net.cost()));
    net.next_round();
  }
  return out;
}

}  // namespace commopt::rowsample
