#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/network.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/commsim/rng.hpp"
#include "commopt/lpsolve/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace commopt::lp {

inline const MessageSchema& cog_schema() {
  static const MessageSchema s = {
      {"cut", PayloadType::integers},
      {"clear", PayloadType::verdict},
      {"done", PayloadType::verdict},
      {"objective", PayloadType::integers},
  };
  return s;
}

struct CogConfig {
  std::optional<double> eps_round;  // default 0.09 / d^{3/2}
  std::size_t samples_per_dim = 1000;
  std::size_t burn_in_factor = 8;  // burn-in = factor * d^2
  double rounds_factor = 1.0;      // T = ceil(factor * d^2 L log2(d + 2))
  std::optional<std::size_t> max_rounds;
  bool stop_when_feasible = true;  // only for instances without c
  bool charge_objective = true;
};

// w . x <= h
struct Halfspace {
  Eigen::VectorXd w;
  double h = 0;
};

struct CogRound {
  Eigen::VectorXd z;
  Eigen::MatrixXd C;
  bool feasible = false;
  std::size_t server = 0;  // first server reporting a violation
  std::optional<Halfspace> cut;
};

struct CogTrace {
  std::vector<Halfspace> initial;
  std::vector<CogRound> rounds;
};

namespace detail {

inline constexpr std::uint64_t kSharedTag = 0x5a5a;

// Hit-and-run chain in {x : w_k . x <= h_k}; directions are Gaussian in the
// frame of `shape` so the walk mixes in near-isotropic position.
class HitAndRun {
 public:
  HitAndRun(const std::vector<Halfspace>& P, const Eigen::MatrixXd& shape, RngStream& rng)
      : P_(P), shape_(shape), rng_(rng) {}

  void step(Eigen::VectorXd& x) {
    const auto d = x.size();
    Eigen::VectorXd g(d);
    for (Eigen::Index i = 0; i < d; ++i) g[i] = rng_.normal();
    const Eigen::VectorXd v = shape_ * g;
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (const auto& hs : P_) {
      const double a = hs.w.dot(v);
      const double slack = std::max(0.0, hs.h - hs.w.dot(x));
      if (a > 0) hi = std::min(hi, slack / a);
      else if (a < 0) lo = std::max(lo, slack / a);
    }
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return;
    x += (lo + (hi - lo) * rng_.uniform01()) * v;
  }

 private:
  const std::vector<Halfspace>& P_;
  Eigen::MatrixXd shape_;
  RngStream& rng_;
};

inline Eigen::MatrixXd sym_power(const Eigen::MatrixXd& C, double p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::pow(std::max(ev[i], 1e-300), p);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline ExactVector exact_point(const Eigen::VectorXd& z) {
  ExactVector x;
  for (Eigen::Index i = 0; i < z.size(); ++i) x.push_back(from_double(z[i]));
  return x;
}

}  // namespace detail

inline std::size_t cog_rounds(std::size_t d, std::size_t L, double factor = 1.0) {
  return static_cast<std::size_t>(
      std::ceil(factor * static_cast<double>(d * d * std::max<std::size_t>(L, 1)) * std::log2(d + 2.0)));
}

// Centroid cutting planes. Every party keeps the same P, centroid z and
// covariance C (estimated by a shared-seed hit-and-run walk). The first
// server holding a constraint violated at z broadcasts its direction,
// rounded down to the eps grid in the isotropic frame; the cut is shifted by
// eps d^{3/2} in that frame so the feasible region stays inside P. With an
// objective, a feasible centroid adds the cut c . x >= c . z instead.
inline ProtocolOutcome center_of_gravity(const Instance& inst, Mode mode, std::uint64_t seed, CogConfig cfg = {},
                                         CogTrace* trace = nullptr) {
  inst.validate();
  const std::size_t d = inst.d;
  const double dd = static_cast<double>(d);
  const double eps = cfg.eps_round.value_or(0.09 / std::pow(dd, 1.5));
  if (!(eps > 0.0 && eps < 0.1 / std::pow(dd, 1.5)))
    throw std::invalid_argument("center_of_gravity: eps_round must be below 0.1 / d^{3/2}");
  const std::size_t bits = integer_bits(inst);
  const double R = cramer_bound(d, bits).get_d() + 1.0;
  const std::size_t T = cfg.max_rounds.value_or(cog_rounds(d, bits, cfg.rounds_factor));
  const std::size_t M = cfg.samples_per_dim * d, burn = cfg.burn_in_factor * d * d;
  const bool optimize = inst.c.has_value();

  auto views = split_servers(inst);
  Network net(mode, inst.s);
  if (optimize && cfg.charge_objective) distribute_objective(net, *inst.c);
  RngStream shared = RngStream(seed).split(detail::kSharedTag);

  std::vector<Halfspace> P;
  for (std::size_t j = 0; j < d; ++j) {
    for (double sgn : {1.0, -1.0}) {
      Halfspace hs{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), R};
      hs.w[static_cast<Eigen::Index>(j)] = sgn;
      P.push_back(hs);
    }
  }
  if (trace) trace->initial = P;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::optional<Eigen::VectorXd> best;
  double best_val = -std::numeric_limits<double>::infinity();
  ProtocolOutcome out;
  std::size_t round = 0;
  bool finished = false;
  for (; round < T && !finished; ++round) {
    // Centroid and covariance of P.
    detail::HitAndRun walk(P, detail::sym_power(C, 0.5), shared);
    Eigen::VectorXd x = start;
    for (std::size_t k = 0; k < burn; ++k) walk.step(x);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(x.size(), x.size());
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(M);
    for (std::size_t k = 0; k < M; ++k) {
      walk.step(x);
      samples.push_back(x);
      mean += x;
    }
    mean /= static_cast<double>(M);
    for (const auto& v : samples) second += (v - mean) * (v - mean).transpose();
    C = second / static_cast<double>(M);
    const double scale = std::max(C.trace() / dd, 1e-300);
    C += 1e-12 * scale * Eigen::MatrixXd::Identity(x.size(), x.size());
    const Eigen::VectorXd z = mean;

    CogRound rec;
    rec.z = z;
    rec.C = C;
    // Servers check z in order; the first violation is rounded and broadcast.
    const ExactVector zx = detail::exact_point(z);
    std::optional<ExactVector> violated;
    for (const auto& v : views) {
      for (std::size_t r = 0; r < v.size() && !violated; ++r)
        if (violates(v.A, v.b, r, zx)) violated = v.A.row_vector(r);
      if (violated) {
        rec.server = v.index;
        break;
      }
      net.send(PartyId::server(v.index), PartyId::coordinator(), "clear", Payload::verdict());
    }
    if (violated) {
      const Eigen::MatrixXd Bh = detail::sym_power(C, 0.5), Bi = detail::sym_power(C, -0.5);
      Eigen::VectorXd a(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) a[static_cast<Eigen::Index>(j)] = (*violated)[j].get_d();
      Eigen::VectorXd u = Bh * a;
      u /= u.norm();
      std::vector<BigInt> grid;
      Eigen::VectorXd ut(u.size());
      for (Eigen::Index j = 0; j < u.size(); ++j) {
        const double k = std::floor(u[j] / eps);
        grid.emplace_back(static_cast<long>(k));
        ut[j] = k * eps;
      }
      net.broadcast(PartyId::server(rec.server), "cut", Payload::integers(grid));
      Halfspace cut{Bi * ut, 0.0};
      cut.h = cut.w.dot(z) + eps * std::pow(dd, 1.5);
      P.push_back(cut);
      rec.cut = cut;
      start = z;
    } else {
      rec.feasible = true;
      if (!optimize) {
        best = z;
        finished = cfg.stop_when_feasible;
      } else {
        Eigen::VectorXd c(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j) c[static_cast<Eigen::Index>(j)] = (*inst.c)[j].get_d();
        const double val = c.dot(z);
        if (val > best_val) {
          best_val = val;
          best = z;
        }
        Halfspace cut{-c, -val};
        // Continue from a sample strictly on the better side, if any.
        std::optional<Eigen::VectorXd> next;
        for (const auto& smp : samples)
          if (c.dot(smp) > val) {
            next = smp;
            break;
          }
        if (!next || c.norm() == 0.0) {
          finished = true;
        } else {
          P.push_back(cut);
          rec.cut = cut;
          start = *next;
        }
      }
    }
    net.broadcast(PartyId::coordinator(), "done", Payload::verdict());
    net.next_round();
    if (trace) trace->rounds.push_back(std::move(rec));
  }

  out.iterations = round;
  out.stats["rounds_cap"] = static_cast<double>(T);
  out.stats["eps_round"] = eps;
  if (best) {
    out.x.assign(best->data(), best->data() + best->size());
    out.status = optimize ? Status::ok : Status::feasible;
    if (optimize) out.objective = best_val;
  } else {
    out.status = Status::empty;
  }
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::lp
