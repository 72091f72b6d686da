#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/linsys/protocols.hpp"
#include "commopt/lpsolve/clarkson.hpp"
#include "commopt/lpsolve/cog.hpp"
#include "commopt/lpsolve/lp.hpp"
#include "commopt/lpsolve/oracle.hpp"
#include "commopt/lpsolve/seidel.hpp"
#include "commopt/lpsolve/smoothed.hpp"
#include "commopt/regression/agd.hpp"
#include "commopt/regression/l1.hpp"
#include "commopt/regression/least_squares.hpp"
#include "commopt/regression/lp_reduction.hpp"
#include "commopt/rowsample/leverage.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace commopt {

struct RunOptions {
  Mode mode = Mode::coordinator;
  std::uint64_t seed = 0;
  double eps = 0.5;
  double p = 4.0;                   // lp-embed only
  double sigma = 0.25;              // lp-smoothed only
  unsigned t = 0;                   // lp-smoothed truncation; 0 = max(60, minimum admissible)
  std::optional<std::uint64_t> noise_seed;
  double C = 20.0;                  // sample-size / block-count constant
  double K = 8.0;                   // linsys K multiplier
  double R = 1.0;                   // multiplier on rounds/iteration caps
  std::string lp_solver = "clarkson";  // linf only
  bool charge_objective = true;        // LP protocols: c goes to every server once
};

struct ProtocolInfo {
  std::string name;
  std::string family;
  bool randomized;
};

inline const std::vector<ProtocolInfo>& protocol_registry() {
  static const std::vector<ProtocolInfo> r = {
      {"linsys-det", "linsys", false},       {"linsys-feas-rand", "linsys", true}, {"linsys-solve-rand", "linsys", true},
      {"leverage", "rowsample", true},        {"lewis", "rowsample", true},         {"l2-exact", "regression", false},
      {"l2-sampled", "regression", true},     {"l1-simple", "regression", true},    {"l1-lewis", "regression", true},
      {"l1-agd", "regression", true},         {"linf", "regression", false},        {"lp-embed", "regression", true},
      {"lp-clarkson", "lp", true},            {"lp-smoothed", "lp", true},          {"lp-cog", "lp", true},
      {"lp-seidel", "lp", true},              {"lp-oracle", "lp", false},
  };
  return r;
}

inline const ProtocolInfo* find_protocol(const std::string& name) {
  for (const auto& p : protocol_registry())
    if (p.name == name) return &p;
  return nullptr;
}

inline unsigned smoothed_truncation(const Instance& inst, const RunOptions& o) {
  return o.t ? o.t : std::max(60u, lp::min_truncation(inst, o.sigma));
}

namespace detail {

inline ProtocolOutcome scores_outcome(const Instance& inst, const std::vector<std::vector<double>>& per_server,
                                      Transcript t) {
  ProtocolOutcome out;
  out.x.assign(inst.n, 0.0);
  for (std::size_t i = 0; i < inst.s; ++i) {
    auto rows = inst.rows_of(i + 1);
    for (std::size_t k = 0; k < rows.size(); ++k) out.x[rows[k]] = per_server[i][k];
  }
  out.transcript = std::move(t);
  return out;
}

// Vertex-enumeration oracle run at the coordinator after every server ships its rows.
inline ProtocolOutcome gathered_oracle(const Instance& inst, Mode mode) {
  if (!inst.c) throw std::invalid_argument("LP instance needs an objective c");
  auto out = regression::gather_lp(inst, mode);
  auto res = lp::lp_exact_oracle(inst);
  ProtocolOutcome o;
  o.transcript = std::move(out.transcript);
  o.status = res.status == lp::LpStatus::optimal ? Status::ok
             : res.status == lp::LpStatus::unbounded ? Status::unbounded
                                                      : Status::infeasible;
  if (o.status == Status::ok) {
    o.set_exact(res.x);
    o.objective_exact = res.objective;
    o.objective = res.objective.get_d();
  }
  o.iterations = res.bases_checked;
  return o;
}

}  // namespace detail

// Throws std::invalid_argument for unknown names and GuardError for size caps.
inline ProtocolOutcome run_protocol(const std::string& name, const Instance& inst, const RunOptions& o) {
  if (!find_protocol(name)) throw std::invalid_argument("unknown protocol: " + name);
  inst.validate();
  using namespace regression;
  if (name == "linsys-det") return linsys::det_solve(inst, o.mode);
  if (name == "linsys-feas-rand" || name == "linsys-solve-rand") {
    linsys::Config cfg;
    cfg.k_multiplier = o.K;
    return name == "linsys-feas-rand" ? linsys::rand_feasibility(inst, o.mode, o.seed, cfg)
                                      : linsys::rand_solve(inst, o.seed, o.mode, cfg);
  }
  if (name == "leverage" || name == "lewis") {
    Network net(o.mode, inst.s);
    std::vector<ExactMatrix> blocks;
    for (const auto& v : split_servers(inst)) blocks.push_back(v.A);
    rowsample::LeverageConfig lc;
    lc.C = o.C;
    if (name == "leverage") {
      auto res = rowsample::leverage_protocol(blocks, inst.d, net, RngStream(o.seed), lc);
      auto out = commopt::detail::scores_outcome(inst, res.scores, net.finish());
      out.stats["levels"] = static_cast<double>(res.levels);
      return out;
    }
    rowsample::LewisConfig wc;
    wc.leverage = lc;
    auto res = rowsample::lewis_protocol(blocks, inst.d, std::max<std::size_t>(inst.L, 1), net, RngStream(o.seed), wc);
    auto out = commopt::detail::scores_outcome(inst, res.weights, net.finish());
    out.iterations = res.iterations;
    return out;
  }
  if (name == "l2-exact") return l2_exact(inst, o.mode).outcome();
  if (name == "l2-sampled") return l2_sampled(inst, o.mode, o.eps, o.seed, {o.C, {}}).outcome();
  if (name == "l1-simple") {
    L1SimpleConfig cfg;
    cfg.C = o.C;
    return l1_simple(inst, o.mode, o.eps, o.seed, cfg).outcome();
  }
  if (name == "l1-lewis") return l1_lewis(inst, o.mode, o.eps, o.seed, {o.C, {}}).outcome();
  if (name == "l1-agd") {
    AgdConfig cfg;
    cfg.C = o.C;
    cfg.c2 = 20.0 * o.R;
    return l1_agd(inst, o.eps, o.seed, cfg).outcome();
  }
  if (name == "linf") return linf_regression(inst, o.mode, o.seed, parse_lp_solver(o.lp_solver)).outcome();
  if (name == "lp-embed") return lp_regression(inst, o.p, o.eps, o.mode, o.seed, {o.C}).outcome();
  if (name == "lp-clarkson") {
    lp::ClarksonConfig cfg;
    cfg.cap_factor *= o.R;
    cfg.charge_objective = o.charge_objective;
    return lp::clarkson(inst, o.mode, o.seed, cfg);
  }
  if (name == "lp-smoothed") {
    lp::PerturbedLP plp{inst, o.sigma, smoothed_truncation(inst, o), o.noise_seed.value_or(o.seed)};
    lp::SmoothedConfig cfg;
    cfg.clarkson.cap_factor *= o.R;
    cfg.clarkson.charge_objective = o.charge_objective;
    return lp::smoothed_clarkson(plp, o.mode, o.seed, cfg);
  }
  if (name == "lp-cog") {
    lp::CogConfig cfg;
    cfg.rounds_factor = o.R;
    cfg.charge_objective = o.charge_objective;
    return lp::center_of_gravity(inst, o.mode, o.seed, cfg);
  }
  if (name == "lp-seidel") {
    lp::SeidelConfig cfg;
    cfg.charge_objective = o.charge_objective;
    return lp::seidel(inst, o.mode, o.seed, cfg);
  }
  return commopt::detail::gathered_oracle(inst, o.mode);
}

namespace detail {

inline Status lp_status(lp::LpStatus s) {
  return s == lp::LpStatus::optimal ? Status::ok : s == lp::LpStatus::unbounded ? Status::unbounded : Status::infeasible;
}

// Exact reference for an LP: vertex enumeration when the basis count is
// small, the exact lexicographic simplex otherwise.
struct LpReference {
  Status status;
  std::optional<Rational> objective;
};

inline LpReference lp_reference(const Instance& inst) {
  if (inst.n > 0 && lp::binomial(inst.n, inst.d) <= 2e5 && rank_and_solve(inst.A).rank == inst.d) {
    auto r = lp::lp_exact_oracle(inst);
    LpReference ref{lp_status(r.status), std::nullopt};
    if (ref.status == Status::ok) ref.objective = r.objective;
    return ref;
  }
  auto r = lp::solve_lp_max(inst.A, inst.b, *inst.c);
  LpReference ref{lp_status(r.status), std::nullopt};
  if (ref.status == Status::ok) ref.objective = r.objective;
  return ref;
}

}  // namespace detail

// Whether an outcome agrees with the exact reference for its instance;
// nullopt when no reference applies (score vectors, l_p embedding).
inline std::optional<bool> oracle_check(const std::string& name, const Instance& inst, const ProtocolOutcome& out,
                                        const RunOptions& o) {
  using namespace regression;
  const auto* info = find_protocol(name);
  if (!info) throw std::invalid_argument("unknown protocol: " + name);
  if (info->family == "linsys") {
    const bool feasible = inst.n == 0 || !rank_and_solve(inst.A, inst.b).infeasible;
    if (!feasible) return out.status == Status::infeasible;
    if (out.status == Status::infeasible) return false;
    if (out.x_exact) return multiply(inst.A, *out.x_exact) == inst.b;
    return out.status == Status::feasible || out.status == Status::ok;
  }
  if (name == "leverage" || name == "lewis" || name == "lp-embed") return std::nullopt;
  if (name == "l2-exact") return out.objective_exact == l2_exact(inst, Mode::coordinator).objective_exact;
  if (name == "l2-sampled") return out.objective <= (1.0 + o.eps) * l2_exact(inst, Mode::coordinator).objective + 1e-9;
  if (info->family == "regression" && name != "linf") {
    try {
      auto opt = l1_exact_oracle(inst);
      return out.objective <= (1.0 + o.eps) * opt.objective + 1e-9;
    } catch (const GuardError&) {
      return std::nullopt;
    }
  }
  if (name == "linf") {
    auto ref = commopt::detail::lp_reference(build_linf_lp(inst));
    return out.objective_exact && ref.objective && *out.objective_exact == -*ref.objective;
  }
  if (!inst.c) return std::nullopt;
  const Instance target = name == "lp-smoothed"
                              ? lp::perturbed_instance({inst, o.sigma, smoothed_truncation(inst, o), o.noise_seed.value_or(o.seed)})
                              : inst;
  auto ref = commopt::detail::lp_reference(target);
  if (name == "lp-cog") {
    if (ref.status == Status::infeasible) return out.status == Status::empty;
    if (out.status == Status::empty || out.x.empty()) return false;
    return lp::satisfies_all(target, lp::detail::exact_point(Eigen::Map<const Eigen::VectorXd>(out.x.data(), static_cast<Eigen::Index>(out.x.size()))));
  }
  if (ref.status != out.status) return false;
  if (ref.status != Status::ok) return true;
  return out.x_exact && dot(*target.c, *out.x_exact) == *ref.objective;
}

}  // namespace commopt
