#pragma once

#include "commopt/regression/common.hpp"
#include "commopt/regression/l1.hpp"
#include "commopt/rowsample/leverage.hpp"
#include "commopt/rowsample/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace commopt::regression {

// Huber-style smoothing of |r|: quadratic inside [-lambda, lambda].
inline double huber(double r, double lambda) {
  const double a = std::abs(r);
  return a > lambda ? a - 0.5 * lambda : r * r / (2.0 * lambda);
}

inline double huber_derivative(double r, double lambda) {
  if (r > lambda) return 1.0;
  if (r < -lambda) return -1.0;
  return r / lambda;
}

struct SmoothingState {
  double lambda = 1.0;
  double sigma = 0.0;
  Eigen::VectorXd x0;  // proximal centre, preconditioned coordinates
  double G = 0.0;      // Lipschitz bound of the unsmoothed objective
  double Theta = 0.0;  // distance bound from x0 to an optimum
};

// sum_i f_lambda(<(SA)^i R^{-1}, y> - (Sb)^i) + sigma/2 ||y - x0||^2, all rows
// on one machine. Used as the reference for the distributed exchange.
struct SmoothedObjective {
  Eigen::MatrixXd SA;
  Eigen::VectorXd Sb;
  Eigen::MatrixXd Rinv;
  SmoothingState state;

  double value(const Eigen::VectorXd& y) const {
    Eigen::VectorXd r = SA * (Rinv * y) - Sb;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) acc += huber(r(i), state.lambda);
    return acc + 0.5 * state.sigma * (y - state.x0).squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const {
    Eigen::VectorXd r = SA * (Rinv * y) - Sb;
    Eigen::VectorXd f(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) f(i) = huber_derivative(r(i), state.lambda);
    return Rinv.transpose() * (SA.transpose() * f) + state.sigma * (y - state.x0);
  }
};

// What one server reports for a query point x = R^{-1} y.
struct GradientShare {
  Eigen::VectorXd sign_sum;   // sum of sign(r_i) (SA)^i over |r_i| > lambda
  Eigen::MatrixXd cov_sum;    // sum of (SA)^i^T (SA)^i over |r_i| <= lambda
  Eigen::VectorXd cross_sum;  // sum of (Sb)^i (SA)^i over |r_i| <= lambda
  double smooth_value = 0.0;
  double l1_value = 0.0;
};

inline GradientShare gradient_share(const Eigen::MatrixXd& SA, const Eigen::VectorXd& Sb, const Eigen::VectorXd& x,
                                    double lambda) {
  const Eigen::Index d = SA.cols();
  GradientShare g;
  g.sign_sum = Eigen::VectorXd::Zero(d);
  g.cov_sum = Eigen::MatrixXd::Zero(d, d);
  g.cross_sum = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < SA.rows(); ++i) {
    const double r = SA.row(i).dot(x) - Sb(i);
    g.smooth_value += huber(r, lambda);
    g.l1_value += std::abs(r);
    if (std::abs(r) > lambda) {
      g.sign_sum += (r > 0 ? 1.0 : -1.0) * SA.row(i).transpose();
    } else {
      g.cov_sum += SA.row(i).transpose() * SA.row(i);
      g.cross_sum += Sb(i) * SA.row(i).transpose();
    }
  }
  return g;
}

// R^{-T} (g1 + (G2 x - h) / lambda) + sigma (y - x0).
inline Eigen::VectorXd assemble_gradient(const std::vector<GradientShare>& shares, const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& Rinv, const SmoothingState& st) {
  const Eigen::Index d = y.size();
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(d), h = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd G2 = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : shares) {
    g1 += s.sign_sum;
    G2 += s.cov_sum;
    h += s.cross_sum;
  }
  const Eigen::VectorXd x = Rinv * y;
  return Rinv.transpose() * (g1 + (G2 * x - h) / st.lambda) + st.sigma * (y - st.x0);
}

// R with A^T A = R^T R from an exact LDL^T of the Gram matrix when every
// pivot is positive; otherwise a ridge-regularised double Cholesky.
inline Eigen::MatrixXd preconditioner(const ExactMatrix& reduced, bool* exact_path = nullptr) {
  const std::size_t d = reduced.cols();
  ExactMatrix G = gram(reduced);
  ExactMatrix L = ExactMatrix::identity(d);
  ExactVector D(d, Rational(0));
  bool ok = true;
  for (std::size_t k = 0; k < d && ok; ++k) {
    Rational dk = G(k, k);
    for (std::size_t j = 0; j < k; ++j) dk -= L(k, j) * L(k, j) * D[j];
    if (dk <= 0) {
      ok = false;
      break;
    }
    D[k] = dk;
    for (std::size_t i = k + 1; i < d; ++i) {
      Rational v = G(i, k);
      for (std::size_t j = 0; j < k; ++j) v -= L(i, j) * L(k, j) * D[j];
      L(i, k) = v / dk;
    }
  }
  if (exact_path) *exact_path = ok;
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(dd, dd);
  if (ok) {
    for (std::size_t k = 0; k < d; ++k) {
      const double s = std::sqrt(D[k].get_d());
      for (std::size_t j = k; j < d; ++j) R(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = s * L(j, k).get_d();
    }
    return R;
  }
  Eigen::MatrixXd Gd = rowsample::to_eigen(G);
  const double ridge = std::max(Gd.trace(), 1.0) * 1e-12;
  Gd += ridge * Eigen::MatrixXd::Identity(dd, dd);
  Eigen::LLT<Eigen::MatrixXd> llt(Gd);
  return llt.matrixU();
}

struct AgdConfig {
  double C = 20.0;         // Lewis sample size constant
  double c2 = 20.0;        // iteration budget ceil(c2 d / eps)
  double isotropy = 2.0;   // assumed bound on ||S A R^{-1}||_2^2
  rowsample::LeverageConfig leverage;
  rowsample::LewisConfig lewis;
  L1SimpleConfig presolve;
};

struct AgdStage {
  double lambda = 0.0;
  double sigma = 0.0;
  double start_value = 0.0;  // smoothed objective at the stage's first query
  double end_value = 0.0;    // best smoothed objective seen in the stage
  std::size_t iterations = 0;
  std::size_t restarts = 0;
};

struct AgdTrace {
  std::vector<AgdStage> stages;
  std::size_t sample_rows = 0;
  double opt_estimate = 0.0;
  bool exact_preconditioner = false;
};

inline const MessageSchema& agd_schema() {
  static const MessageSchema s = {
      {"rows", PayloadType::matrix},      {"sample_mass", PayloadType::reals}, {"sample_count", PayloadType::count},
      {"sampled_rows", PayloadType::matrix}, {"factor", PayloadType::matrix},  {"gram", PayloadType::matrix},
      {"moment", PayloadType::scalars},   {"sketch", PayloadType::matrix},     {"presolve", PayloadType::scalars},
      {"residual", PayloadType::reals},   {"query", PayloadType::reals},       {"sign_sum", PayloadType::reals},
      {"cov_sum", PayloadType::matrix},    {"cross_sum", PayloadType::reals},   {"values", PayloadType::reals},
  };
  return s;
}

inline std::size_t agd_sample_budget(std::size_t d, std::size_t n, double eps, double C = 20.0) {
  return static_cast<std::size_t>(
      std::ceil(C * static_cast<double>(d) * std::log2(static_cast<double>(n) + 1.0) / (eps * eps)));
}

// Coordinator model. Lewis sample -> leverage-reduced preconditioner ->
// exact l2 warm start -> halving smoothing stages of Nesterov steps, with the
// two-branch gradient exchange every iteration.
inline RegressionResult l1_agd(const Instance& inst, double eps, std::uint64_t seed, const AgdConfig& cfg = {},
                               AgdTrace* trace = nullptr) {
  require_eps(eps, "l1_agd");
  inst.validate();
  bool nonzero = false;
  for (const auto& q : inst.A.data()) nonzero = nonzero || q != 0;
  if (!nonzero) throw std::invalid_argument("l1_agd: A is the zero matrix");

  const std::size_t d = inst.d;
  Network net(Mode::coordinator, inst.s);
  RngStream root(seed);
  AgdTrace local_trace;
  AgdTrace& tr = trace ? *trace : local_trace;
  tr = AgdTrace{};

  auto aug = augmented_blocks(inst);
  for (auto& blk : aug) blk = drop_zero_rows(blk);
  std::size_t live = 0;
  for (const auto& blk : aug) live += blk.rows();

  // Lewis sample, kept at the servers.
  const std::size_t N = agd_sample_budget(d, inst.n, eps, cfg.C);
  std::vector<ExactMatrix> sampled = aug;
  if (N < live) {
    auto lw = rowsample::lewis_protocol(aug, d + 1, std::max<std::size_t>(inst.L, 1), net, root.split(0x21), cfg.lewis);
    for (std::size_t i = 0; i < aug.size(); ++i) {
      RngStream rng = root.split(server_tag(i + 1)).split(0x21);
      std::vector<std::size_t> picked;
      std::vector<double> scales;
      for (std::size_t r = 0; r < aug[i].rows(); ++r) {
        const double p = rowsample::round_sampling_value(
            std::min(1.0, static_cast<double>(N) * lw.weights[i][r] / static_cast<double>(d + 1)), rowsample::Norm::l1);
        if (p > 0.0 && rng.bernoulli(p)) {
          picked.push_back(r);
          scales.push_back(1.0 / p);
        }
      }
      sampled[i] = picked.empty() ? ExactMatrix(0, d + 1) : rowsample::scaled_row_matrix(aug[i], picked, scales);
    }
  }
  std::vector<Eigen::MatrixXd> SA;
  std::vector<Eigen::VectorXd> Sb;
  std::vector<ExactMatrix> sa_blocks;
  for (const auto& blk : sampled) {
    auto [a, b] = split_augmented(blk);
    Eigen::MatrixXd m = rowsample::to_eigen(blk);
    SA.push_back(m.leftCols(static_cast<Eigen::Index>(d)));
    Sb.push_back(m.col(static_cast<Eigen::Index>(d)));
    sa_blocks.push_back(std::move(a));
    tr.sample_rows += blk.rows();
  }

  // Preconditioner from the leverage-reduced matrix.
  auto lev = rowsample::leverage_protocol(sa_blocks, d, net, root.split(0x22), cfg.leverage);
  Eigen::MatrixXd R = preconditioner(lev.reduced, &tr.exact_preconditioner);
  Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  {
    Matrix<double> rm(d, d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) rm(r, c) = R(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    net.broadcast(PartyId::coordinator(), "factor", Payload::real_matrix(rm, net.cost()));
    net.next_round();
  }

  // Warm start and constant-factor OPT estimate, both on the sample.
  ExactVector x_ls = detail::gram_exchange(sampled, d, net);
  auto pre = detail::l1_sketch_exchange(sampled, 1.0, net, root.split(0x23), cfg.presolve);
  net.broadcast(PartyId::coordinator(), "presolve", Payload::scalars(pre.x, net.cost()));
  net.next_round();
  const std::vector<double> x_pre = to_doubles(pre.x);
  Eigen::VectorXd xp = Eigen::Map<const Eigen::VectorXd>(x_pre.data(), static_cast<Eigen::Index>(d));
  double V = 0.0;
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    if (sampled[i].rows() == 0) continue;
    const double v = (SA[i] * xp - Sb[i]).lpNorm<1>();
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "residual", Payload::real(v, net.cost()));
    V += v;
  }
  net.next_round();
  tr.opt_estimate = V;

  std::vector<double> best_x = x_pre;
  double best_l1 = V;
  std::size_t total_iters = 0;

  if (V > 0.0) {
    const std::vector<double> x0d = to_doubles(x_ls);
    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x0d.data(), static_cast<Eigen::Index>(d));
    const double ns = static_cast<double>(std::max<std::size_t>(tr.sample_rows, 1));
    const double delta = eps * V / 2.0;
    const std::size_t K = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log2(4.0 / eps))));
    const std::size_t budget = static_cast<std::size_t>(std::ceil(cfg.c2 * static_cast<double>(d) / eps));
    SmoothingState st;
    st.x0 = R * x0;
    st.Theta = 2.0 * V;
    st.G = std::sqrt(ns * static_cast<double>(d));
    const double lambda_final = delta / ns;
    const double sigma_final = delta / (2.0 * st.Theta * st.Theta);

    // One round of the exchange at y; returns (smoothed value, gradient).
    auto query = [&](const Eigen::VectorXd& y, double& l1) {
      const Eigen::VectorXd x = Rinv * y;
      std::vector<double> xv(x.data(), x.data() + x.size());
      net.broadcast(PartyId::coordinator(), "query", Payload::reals(xv, net.cost()));
      net.next_round();
      std::vector<GradientShare> shares;
      double smooth = 0.0;
      l1 = 0.0;
      for (std::size_t i = 0; i < SA.size(); ++i) {
        if (SA[i].rows() == 0) continue;
        auto g = gradient_share(SA[i], Sb[i], x, st.lambda);
        const auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
        Matrix<double> cov(d, d, 0.0);
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t c = 0; c < d; ++c) cov(r, c) = g.cov_sum(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        const PartyId me = PartyId::server(i + 1);
        net.send(me, PartyId::coordinator(), "sign_sum", Payload::reals(to_vec(g.sign_sum), net.cost()));
        net.send(me, PartyId::coordinator(), "cov_sum", Payload::real_matrix(cov, net.cost()));
        net.send(me, PartyId::coordinator(), "cross_sum", Payload::reals(to_vec(g.cross_sum), net.cost()));
        net.send(me, PartyId::coordinator(), "values", Payload::reals({g.smooth_value, g.l1_value}, net.cost()));
        smooth += g.smooth_value;
        l1 += g.l1_value;
        shares.push_back(std::move(g));
      }
      net.next_round();
      ++total_iters;
      return std::pair{smooth + 0.5 * st.sigma * (y - st.x0).squaredNorm(), assemble_gradient(shares, y, Rinv, st)};
    };
    auto consider = [&](const Eigen::VectorXd& y, double l1) {
      if (l1 < best_l1) {
        best_l1 = l1;
        const Eigen::VectorXd x = Rinv * y;
        best_x.assign(x.data(), x.data() + x.size());
      }
    };

    Eigen::VectorXd start = st.x0;
    for (std::size_t k = 0; k < K; ++k) {
      const double scale = std::exp2(static_cast<double>(K - 1 - k));
      st.lambda = lambda_final * scale;
      st.sigma = sigma_final * scale;
      const double Ls = cfg.isotropy / st.lambda + st.sigma;
      const std::size_t iters = std::max<std::size_t>(1, budget / K + (k < budget % K ? 1 : 0));
      AgdStage stage;
      stage.lambda = st.lambda;
      stage.sigma = st.sigma;

      Eigen::VectorXd y = start, v = start, best_y = start, best_grad;
      double t = 1.0, prev = kInfNorm, best_val = kInfNorm;
      for (std::size_t it = 0; it < iters; ++it) {
        double l1 = 0.0;
        auto [val, grad] = query(v, l1);
        consider(v, l1);
        if (it == 0) stage.start_value = val;
        ++stage.iterations;
        if (val < best_val) {
          best_val = val;
          best_y = v;
          best_grad = grad;
        }
        if (val > prev) {
          // Adaptive restart: drop the momentum and step from the best point.
          ++stage.restarts;
          t = 1.0;
          y = best_y;
          v = best_y - best_grad / Ls;
          prev = best_val;
          continue;
        }
        prev = val;
        Eigen::VectorXd y_next = v - grad / Ls;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        v = y_next + ((t - 1.0) / t_next) * (y_next - y);
        y = y_next;
        t = t_next;
      }
      stage.end_value = best_val;
      tr.stages.push_back(stage);
      start = best_y;
    }
  }

  RegressionResult out;
  out.method = "l1-agd";
  out.eps = eps;
  out.p = 1.0;
  out.x = best_x;
  out.objective = residual_norm(inst, out.x, 1.0);
  out.stats["iterations"] = static_cast<double>(total_iters);
  out.stats["stages"] = static_cast<double>(tr.stages.size());
  out.stats["sample_rows"] = static_cast<double>(tr.sample_rows);
  out.stats["opt_estimate"] = V;
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::regression
