#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/network.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/commsim/rng.hpp"
#include "commopt/lpsolve/common.hpp"
#include "commopt/lpsolve/lp.hpp"

#include <optional>
#include <vector>

namespace commopt::lp {

inline const MessageSchema& seidel_schema() {
  static const MessageSchema s = {
      {"constraint", PayloadType::integers}, {"solution", PayloadType::scalars},
      {"interval", PayloadType::scalars},    {"result", PayloadType::scalars},
      {"verdict", PayloadType::verdict},    {"objective", PayloadType::integers},
  };
  return s;
}

struct SeidelConfig {
  std::size_t max_depth = 6;
  bool charge_objective = true;
};

namespace detail {

// Servers go in the fixed order 1..s, each through its own rows in a seeded
// random order. A violated constraint forces the optimum onto its boundary:
// the owner broadcasts it (unless it is server 1, whose recursion is local)
// and the constraints seen so far are replayed in the same order inside the
// hyperplane. The objective is lexicographic (c, then smallest x), kept
// bounded by the Cramer box, so every subproblem has a unique optimum.
class SeidelRun {
 public:
  SeidelRun(const Instance& inst, Mode mode, std::uint64_t seed)
      : inst_(inst), d_(inst.d), net_(mode, inst.s), objs_(lex_objectives(*inst.c)) {
    RngStream root(seed);
    for (std::size_t i = 1; i <= inst.s; ++i) {
      auto rows = inst.rows_of(i);
      RngStream rng = root.split(server_tag(i));
      rng.shuffle(rows);
      for (auto r : rows) {
        order_.push_back(r);
        owner_.push_back(i);
      }
    }
    cramer_ = cramer_bound(d_, integer_bits(inst));
    box_A_ = ExactMatrix(0, d_);
    append_box(box_A_, box_b_, d_, Rational(cramer_ + 1));
  }

  void distribute_objective() { lp::distribute_objective(net_, *inst_.c); }

  ProtocolOutcome run() {
    Param top;
    top.x0.assign(d_, Rational(0));
    for (std::size_t j = 0; j < d_; ++j) {
      ExactVector e(d_, Rational(0));
      e[j] = 1;
      top.cols.push_back(e);
    }
    auto x = solve(top, order_.size());
    ProtocolOutcome out;
    const PartyId holder = token_ == 0 ? PartyId::coordinator() : PartyId::server(token_);
    if (!x) {
      net_.broadcast(holder, "verdict", Payload::verdict());
      out.status = Status::infeasible;
    } else {
      if (holder.is_server()) net_.send(holder, PartyId::coordinator(), "result", Payload::scalars(*x));
      out.set_exact(*x);
      out.objective_exact = dot(*inst_.c, *x);
      out.objective = out.objective_exact->get_d();
      out.status = exceeds_vertex_bound(*inst_.c, *x, cramer_) ? Status::unbounded : Status::ok;
    }
    out.iterations = recursions_;
    out.stats["broadcasts"] = static_cast<double>(broadcasts_);
    out.stats["recursions"] = static_cast<double>(recursions_);
    out.transcript = net_.finish();
    return out;
  }

 private:
  // Affine parametrization x = x0 + sum_j y_j cols[j] of the current flat.
  struct Param {
    ExactVector x0;
    std::vector<ExactVector> cols;
  };

  ExactVector point(const Param& P, const ExactVector& y) const {
    ExactVector x = P.x0;
    for (std::size_t j = 0; j < P.cols.size(); ++j)
      for (std::size_t k = 0; k < d_; ++k) x[k] += y[j] * P.cols[j][k];
    return x;
  }

  // Hands the current state to server `to`; state reachable by everyone
  // (token 0) costs nothing.
  void pass_token(std::size_t to, const ExactVector& state, const char* kind) {
    if (token_ != to && token_ != 0) {
      net_.send(PartyId::server(token_), PartyId::server(to), kind, Payload::scalars(state));
      net_.next_round();
    }
    token_ = to;
  }

  // Lexicographic optimum of the box restricted to the flat.
  std::optional<ExactVector> box_optimum(const Param& P) const {
    const std::size_t k = P.cols.size();
    ExactMatrix M(box_A_.rows(), k);
    ExactVector h(box_A_.rows());
    for (std::size_t r = 0; r < box_A_.rows(); ++r) {
      Rational ax0 = 0;
      for (std::size_t t = 0; t < d_; ++t) ax0 += box_A_(r, t) * P.x0[t];
      h[r] = box_b_[r] - ax0;
      for (std::size_t j = 0; j < k; ++j) {
        Rational v = 0;
        for (std::size_t t = 0; t < d_; ++t) v += box_A_(r, t) * P.cols[j][t];
        M(r, j) = v;
      }
    }
    std::vector<ExactVector> objs;
    for (const auto& o : objs_) objs.push_back(project(P, o));
    auto res = solve_lp_lexobj(M, h, objs);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return point(P, res.x);
  }

  ExactVector project(const Param& P, const ExactVector& a) const {
    ExactVector out;
    for (const auto& col : P.cols) out.push_back(dot(a, col));
    return out;
  }

  std::optional<ExactVector> solve(const Param& P, std::size_t limit) {
    if (P.cols.size() == 1) return solve_line(P, limit);
    auto x = box_optimum(P);
    if (!x) return std::nullopt;
    for (std::size_t pos = 0; pos < limit; ++pos) {
      const std::size_t r = order_[pos], srv = owner_[pos];
      pass_token(srv, *x, "solution");
      if (!violates(inst_.A, inst_.b, r, *x)) continue;
      ExactVector a = inst_.A.row_vector(r);
      ExactVector alpha = project(P, a);
      const Rational beta = inst_.b[r] - dot(a, P.x0);
      std::size_t p = 0;
      while (p < alpha.size() && alpha[p] == 0) ++p;
      if (p == alpha.size()) return std::nullopt;  // parallel to the flat and violated
      if (srv > 1) {
        net_.broadcast(PartyId::server(srv), "constraint", Payload::integers(integer_constraint(inst_, r)));
        net_.next_round();
        ++broadcasts_;
        token_ = 0;
      }
      ++recursions_;
      if (d_ - P.cols.size() + 1 > max_depth_) throw GuardError("seidel: recursion depth guard");
      // Substitute y_p = (beta - sum_{j != p} alpha_j y_j) / alpha_p.
      Param Q;
      Q.x0 = P.x0;
      for (std::size_t t = 0; t < d_; ++t) Q.x0[t] += P.cols[p][t] * beta / alpha[p];
      for (std::size_t j = 0; j < P.cols.size(); ++j) {
        if (j == p) continue;
        ExactVector col = P.cols[j];
        const Rational f = alpha[j] / alpha[p];
        if (f != 0)
          for (std::size_t t = 0; t < d_; ++t) col[t] -= P.cols[p][t] * f;
        Q.cols.push_back(std::move(col));
      }
      auto sub = solve(Q, pos);
      if (!sub) return std::nullopt;
      x = sub;
    }
    return x;
  }

  // One free parameter: intersect intervals in closed form.
  std::optional<ExactVector> solve_line(const Param& P, std::size_t limit) {
    const ExactVector& dir = P.cols[0];
    std::optional<Rational> lo, hi;
    auto clip = [&](const ExactVector& a, const Rational& b) -> bool {
      const Rational alpha = dot(a, dir);
      const Rational beta = b - dot(a, P.x0);
      if (alpha == 0) return beta >= 0;
      const Rational bound = beta / alpha;
      if (alpha > 0) {
        if (!hi || bound < *hi) hi = bound;
      } else {
        if (!lo || bound > *lo) lo = bound;
      }
      return !(lo && hi && *lo > *hi);
    };
    for (std::size_t r = 0; r < box_A_.rows(); ++r)
      if (!clip(box_A_.row_vector(r), box_b_[r])) return std::nullopt;
    for (std::size_t pos = 0; pos < limit; ++pos) {
      pass_token(owner_[pos], ExactVector{*lo, *hi}, "interval");
      if (!clip(inst_.A.row_vector(order_[pos]), inst_.b[order_[pos]])) return std::nullopt;
    }
    int direction = 0;
    for (const auto& o : objs_) {
      const Rational v = dot(o, dir);
      if (v != 0) {
        direction = v > 0 ? 1 : -1;
        break;
      }
    }
    const Rational y = direction >= 0 ? *hi : *lo;
    return point(P, ExactVector{y});
  }

  const Instance& inst_;
  std::size_t d_;
  Network net_;
  std::vector<ExactVector> objs_;
  std::vector<std::size_t> order_, owner_;
  BigInt cramer_;
  ExactMatrix box_A_;
  ExactVector box_b_;
  std::size_t token_ = 0;
  std::size_t max_depth_ = 6;
  std::uint64_t broadcasts_ = 0, recursions_ = 0;

 public:
  void set_max_depth(std::size_t v) { max_depth_ = v; }
};

}  // namespace detail

inline ProtocolOutcome seidel(const Instance& inst, Mode mode, std::uint64_t seed, SeidelConfig cfg = {}) {
  require_objective(inst);
  if (inst.d > cfg.max_depth) throw GuardError("seidel: dimension exceeds the recursion depth guard");
  detail::SeidelRun run(inst, mode, seed);
  run.set_max_depth(cfg.max_depth);
  if (cfg.charge_objective) run.distribute_objective();
  return run.run();
}

}  // namespace commopt::lp
