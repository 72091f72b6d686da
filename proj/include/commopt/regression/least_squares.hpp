#pragma once

#include "commopt/regression/common.hpp"
#include "commopt/rowsample/leverage.hpp"
#include "commopt/rowsample/sampling.hpp"

#include <cmath>

namespace commopt::regression {

inline const MessageSchema& l2_schema() {
  static const MessageSchema s = {
      {"gram", PayloadType::matrix},        {"moment", PayloadType::scalars},   {"rows", PayloadType::matrix},
      {"sample_mass", PayloadType::reals},  {"sample_count", PayloadType::count}, {"sampled_rows", PayloadType::matrix},
  };
  return s;
}

inline void finish_l2(RegressionResult& out, const Instance& inst, ExactVector x) {
  out.p = 2.0;
  out.objective_exact = residual_l2sq_exact(inst.A, inst.b, x);
  out.objective = std::sqrt(out.objective_exact->get_d());
  out.set_exact(std::move(x));
}

inline RegressionResult l2_exact(const Instance& inst, Mode mode) {
  inst.validate();
  Network net(mode, inst.s);
  RegressionResult out;
  out.method = "l2-exact";
  finish_l2(out, inst, detail::gram_exchange(augmented_blocks(inst), inst.d, net));
  out.transcript = net.finish();
  return out;
}

struct L2SampledConfig {
  double C = 20.0;
  rowsample::LeverageConfig leverage;
};

inline std::size_t l2_sample_budget(std::size_t d, double eps, double C = 20.0) {
  const double dd = static_cast<double>(d);
  return static_cast<std::size_t>(std::ceil(C * (dd / eps + dd * std::log2(dd + 1.0))));
}

// Leverage scores of [A b], then N draws with p_i = min(1, N tau_i / (d+1));
// the scores sum to the rank of [A b], so sum(p) is about N.
inline RegressionResult l2_sampled(const Instance& inst, Mode mode, double eps, std::uint64_t seed,
                                   const L2SampledConfig& cfg = {}) {
  require_eps(eps, "l2_sampled");
  inst.validate();
  const std::size_t d = inst.d;
  const std::size_t N = l2_sample_budget(d, eps, cfg.C);
  Network net(mode, inst.s);
  RegressionResult out;
  out.method = "l2-sampled";
  out.eps = eps;
  out.stats["budget"] = static_cast<double>(N);
  auto aug = augmented_blocks(inst);
  if (N >= inst.n) {
    out.stats["fallback"] = 1;
    finish_l2(out, inst, detail::gram_exchange(aug, d, net));
    out.transcript = net.finish();
    return out;
  }
  for (auto& blk : aug) blk = drop_zero_rows(blk);

  RngStream root(seed);
  auto lev = rowsample::leverage_protocol(aug, d + 1, net, root.split(0x12), cfg.leverage);
  std::vector<std::vector<double>> p(aug.size());
  for (std::size_t i = 0; i < aug.size(); ++i)
    for (double tau : lev.scores[i]) {
      double v = std::isinf(tau) ? 1.0 : std::min(1.0, static_cast<double>(N) * tau / static_cast<double>(d + 1));
      p[i].push_back(rowsample::round_sampling_value(v, rowsample::Norm::l2));
    }
  RngStream coord = root.split(kCoordinatorTag);
  std::vector<RngStream> servers;
  for (std::size_t i = 0; i < aug.size(); ++i) servers.push_back(root.split(server_tag(i + 1)));
  auto sample = rowsample::distributed_sample(aug, p, rowsample::Norm::l2, net, coord, servers, false);
  out.stats["fallback"] = 0;
  out.stats["sampled_rows"] = static_cast<double>(sample.rows.rows());

  auto [sa, sb] = split_augmented(sample.rows);
  auto x = min_norm_solve(gram(sa), gram_rhs(sa, sb));
  finish_l2(out, inst, *x);
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::regression
