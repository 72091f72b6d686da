#pragma once

#include "commopt/lpsolve/clarkson.hpp"
#include "commopt/lpsolve/lp.hpp"
#include "commopt/lpsolve/seidel.hpp"
#include "commopt/regression/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace commopt::regression {

// Constraint pair per row j: <A_j, x> - v <= b_j and -<A_j, x> - v <= -b_j,
// over the variables (x, v); maximize -v.
inline Instance build_linf_lp(const Instance& inst) {
  inst.validate();
  const std::size_t d = inst.d;
  ExactMatrix A(0, d + 1);
  ExactVector b;
  std::vector<std::size_t> part;
  for (std::size_t r = 0; r < inst.n; ++r) {
    for (int sign : {1, -1}) {
      ExactVector row(d + 1);
      for (std::size_t c = 0; c < d; ++c) row[c] = sign * inst.A(r, c);
      row[d] = -1;
      A.append_row(row);
      b.push_back(sign * inst.b[r]);
      part.push_back(inst.partition[r]);
    }
  }
  ExactVector c(d + 1, Rational(0));
  c[d] = -1;
  Instance lp = make_instance("lp-linf", std::move(A), std::move(b), std::move(part), std::move(c));
  lp.s = inst.s;
  return lp;
}

enum class LpSolver { clarkson, seidel, gather };

inline LpSolver parse_lp_solver(const std::string& s) {
  if (s == "clarkson") return LpSolver::clarkson;
  if (s == "seidel") return LpSolver::seidel;
  if (s == "gather") return LpSolver::gather;
  throw std::invalid_argument("unknown LP solver: " + s);
}

inline const MessageSchema& gather_schema() {
  static const MessageSchema s = {{"rows", PayloadType::matrix}, {"weights", PayloadType::scalars}};
  return s;
}

// Every server ships its constraints; the coordinator runs the exact
// lexicographic simplex.
inline ProtocolOutcome gather_lp(const Instance& lp, Mode mode) {
  Network net(mode, lp.s);
  for (const auto& v : split_servers(lp)) {
    if (v.size() == 0) continue;
    ExactMatrix m(v.size(), lp.d + 1);
    for (std::size_t r = 0; r < v.size(); ++r) {
      for (std::size_t c = 0; c < lp.d; ++c) m(r, c) = v.A(r, c);
      m(r, lp.d) = v.b[r];
    }
    net.send(PartyId::server(v.index), PartyId::coordinator(), "rows", Payload::matrix(m, net.cost()));
  }
  net.next_round();
  auto res = lp::solve_lp_max_lex(lp.A, lp.b, *lp.c);
  ProtocolOutcome out;
  if (res.status == lp::LpStatus::infeasible) out.status = Status::infeasible;
  else if (res.status == lp::LpStatus::unbounded) out.status = Status::unbounded;
  else {
    out.set_exact(res.x);
    out.objective_exact = res.objective;
    out.objective = res.objective.get_d();
  }
  out.iterations = res.iterations;
  out.transcript = net.finish();
  return out;
}

inline ProtocolOutcome run_lp(const Instance& lp, Mode mode, std::uint64_t seed, LpSolver solver) {
  switch (solver) {
    // The objective is fixed by the construction; there is nothing to hand out.
    case LpSolver::clarkson: {
      lp::ClarksonConfig cfg;
      cfg.charge_objective = false;
      return lp::clarkson(lp, mode, seed, cfg);
    }
    case LpSolver::seidel: {
      lp::SeidelConfig cfg;
      cfg.charge_objective = false;
      return lp::seidel(lp, mode, seed, cfg);
    }
    default: return gather_lp(lp, mode);
  }
}

inline RegressionResult linf_regression(const Instance& inst, Mode mode, std::uint64_t seed = 0,
                                        LpSolver solver = LpSolver::clarkson) {
  Instance lp = build_linf_lp(inst);
  auto res = run_lp(lp, mode, seed, solver);
  if (res.status != Status::ok || !res.x_exact)
    throw std::logic_error("linf_regression: the LP is feasible and bounded, solver reported " + to_string(res.status));
  ExactVector x(res.x_exact->begin(), res.x_exact->begin() + static_cast<std::ptrdiff_t>(inst.d));
  RegressionResult out;
  out.method = "linf";
  out.p = kInfNorm;
  out.objective_exact = residual_linf_exact(inst.A, inst.b, x);
  out.objective = out.objective_exact->get_d();
  out.set_exact(std::move(x));
  out.stats = res.stats;
  out.stats["iterations"] = static_cast<double>(res.iterations);
  out.transcript = std::move(res.transcript);
  return out;
}

// C_p = E[E^{-1/p}] = Gamma(1 - 1/p) for E ~ Exp(1).
inline double c_p(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("c_p: p must exceed 1");
  return std::tgamma(1.0 - 1.0 / p);
}

struct EmbedConfig {
  double C = 20.0;
};

inline std::size_t embed_blocks(std::size_t d, double eps, double C = 20.0) {
  const double dd = static_cast<double>(d);
  return static_cast<std::size_t>(std::ceil(C * dd * std::log2((dd + 2.0) / eps) / (eps * eps)));
}

inline unsigned embed_precision(std::size_t d, double eps) {
  const double v = 3.0 * std::log2(static_cast<double>(d) / eps);
  return v <= 0.0 ? 0u : static_cast<unsigned>(std::ceil(v - 1e-12));
}

struct EmbeddedLp {
  Instance lp;  // variables (x_1..x_d, v_1..v_R); maximize -sum v
  std::size_t R = 0;
  unsigned q = 0;
  std::vector<std::vector<Rational>> D;  // D[k][row], row in instance order
};

// Block k contributes D_kj (<A_j, x> - b_j) <= v_k and its negation for every
// row j. All constraints are scaled by the common power-of-two denominator of
// D so the LP has integer entries.
inline EmbeddedLp build_embedded_lp(const Instance& inst, std::vector<std::vector<Rational>> D) {
  inst.validate();
  const std::size_t d = inst.d, R = D.size();
  if (R == 0) throw std::invalid_argument("build_embedded_lp: no blocks");
  BigInt den = 1;
  for (const auto& blk : D) {
    if (blk.size() != inst.n) throw std::invalid_argument("build_embedded_lp: block length does not match n");
    for (const auto& v : blk) den = lcm_int(den, BigInt(v.get_den()));
  }
  const Rational scale(den);
  ExactMatrix A(0, d + R);
  ExactVector b;
  std::vector<std::size_t> part;
  for (std::size_t k = 0; k < R; ++k) {
    for (std::size_t j = 0; j < inst.n; ++j) {
      const Rational w = D[k][j] * scale;
      for (int sign : {1, -1}) {
        ExactVector row(d + R, Rational(0));
        for (std::size_t c = 0; c < d; ++c) row[c] = sign * w * inst.A(j, c);
        row[d + k] = -scale;
        A.append_row(row);
        b.push_back(sign * w * inst.b[j]);
        part.push_back(inst.partition[j]);
      }
    }
  }
  ExactVector c(d + R, Rational(0));
  for (std::size_t k = 0; k < R; ++k) c[d + k] = -1;
  EmbeddedLp out;
  out.lp = make_instance("lp-embed", std::move(A), std::move(b), std::move(part), std::move(c));
  out.lp.s = inst.s;
  out.R = R;
  out.D = std::move(D);
  return out;
}

// Nearest multiple of 2^{-q}, ties upward.
inline Rational round_dyadic(double v, unsigned q) {
  BigInt k(std::floor(std::ldexp(v, static_cast<int>(q)) + 0.5));
  return make_rational(k, BigInt(1) << q);
}

// Server i draws its rows' entries, block by block, from substream server_tag(i).
inline std::vector<std::vector<Rational>> draw_embedding(const Instance& inst, double p, std::size_t R, unsigned q,
                                                         std::uint64_t seed) {
  RngStream root(seed);
  std::vector<std::vector<Rational>> D(R, std::vector<Rational>(inst.n));
  for (std::size_t i = 1; i <= inst.s; ++i) {
    RngStream rng = root.split(server_tag(i));
    auto rows = inst.rows_of(i);
    for (std::size_t k = 0; k < R; ++k)
      for (auto j : rows) D[k][j] = round_dyadic(std::pow(rng.exponential(), -1.0 / p), q);
  }
  return D;
}

inline EmbeddedLp lp_embed_reduce(const Instance& inst, double p, double eps, std::uint64_t seed,
                                  const EmbedConfig& cfg = {}) {
  if (!(p > 2.0) || std::isinf(p)) throw std::invalid_argument("lp_embed_reduce: p must be finite and > 2");
  require_eps(eps, "lp_embed_reduce");
  const std::size_t R = embed_blocks(inst.d, eps, cfg.C);
  const unsigned q = embed_precision(inst.d, eps);
  auto out = build_embedded_lp(inst, draw_embedding(inst, p, R, q, seed));
  out.q = q;
  return out;
}

struct EmbeddedSolve {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t active = 0;
  std::size_t passes = 0;
};

// min sum_k max_j |D_kj (<A_j, x> - b_j)| in double precision by constraint
// generation: the LP starts from the largest scaled residual of each block at
// the least-squares point, and each pass adds every block's most violated row.
inline EmbeddedSolve solve_embedded_lp(const Instance& inst, const std::vector<std::vector<Rational>>& D,
                                       double tol = 1e-9, std::size_t max_passes = 500) {
  const std::size_t n = inst.n, d = inst.d, R = D.size();
  const auto Ad = to_double_matrix(inst.A);
  const auto bd = to_doubles(inst.b);
  std::vector<std::vector<double>> Dd(R, std::vector<double>(n));
  for (std::size_t k = 0; k < R; ++k)
    for (std::size_t j = 0; j < n; ++j) Dd[k][j] = D[k][j].get_d();
  auto residuals = [&](const std::vector<double>& x) {
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) {
      double v = -bd[j];
      for (std::size_t c = 0; c < d; ++c) v += Ad(j, c) * x[c];
      r[j] = v;
    }
    return r;
  };
  auto worst = [&](std::size_t k, const std::vector<double>& r) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(Dd[k][j] * r[j]) > best) best = std::abs(Dd[k][j] * r[j]), arg = j;
    return std::pair{arg, best};
  };

  Matrix<double> A(0, d + R);
  std::vector<double> b;
  std::vector<bool> seen(R * n, false);
  auto add = [&](std::size_t k, std::size_t j) {
    if (seen[k * n + j]) return false;
    seen[k * n + j] = true;
    for (int sign : {1, -1}) {
      std::vector<double> row(d + R, 0.0);
      for (std::size_t c = 0; c < d; ++c) row[c] = sign * Dd[k][j] * Ad(j, c);
      row[d + k] = -1.0;
      A.append_row(row);
      b.push_back(sign * Dd[k][j] * bd[j]);
    }
    return true;
  };

  std::vector<double> x(d, 0.0);
  {
    Eigen::MatrixXd Ae(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd be(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) Ae(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = Ad(j, c);
      be(static_cast<Eigen::Index>(j)) = bd[j];
    }
    Eigen::VectorXd x0 = Ae.colPivHouseholderQr().solve(be);
    for (std::size_t c = 0; c < d; ++c) x[c] = x0(static_cast<Eigen::Index>(c));
  }
  auto r = residuals(x);
  for (std::size_t k = 0; k < R; ++k) add(k, worst(k, r).first);

  std::vector<double> c(d + R, 0.0);
  for (std::size_t k = 0; k < R; ++k) c[d + k] = -1.0;
  EmbeddedSolve out;
  for (;;) {
    auto res = lp::solve_lp_max(A, b, c);
    if (res.status != lp::LpStatus::optimal) throw std::runtime_error("lp_regression: reduced LP solve failed");
    out.iterations += res.iterations;
    ++out.passes;
    x.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(d));
    r = residuals(x);
    bool added = false;
    out.value = 0.0;
    for (std::size_t k = 0; k < R; ++k) {
      auto [j, v] = worst(k, r);
      out.value += v;
      if (v > res.x[d + k] + tol * std::max(1.0, v)) added = add(k, j) || added;
    }
    if (!added || out.passes >= max_passes) break;
  }
  out.x = std::move(x);
  out.active = b.size();
  return out;
}

inline const MessageSchema& embed_schema() {
  static const MessageSchema s = {{"rows", PayloadType::matrix}, {"weights", PayloadType::scalars}};
  return s;
}

// Servers ship [A_i b_i] and their diagonal entries; the coordinator
// rebuilds the reduced LP and solves it in double precision.
inline RegressionResult lp_regression(const Instance& inst, double p, double eps, Mode mode, std::uint64_t seed,
                                      const EmbedConfig& cfg = {}) {
  auto emb = lp_embed_reduce(inst, p, eps, seed, cfg);
  Network net(mode, inst.s);
  auto aug = augmented_blocks(inst);
  for (std::size_t i = 0; i < aug.size(); ++i) {
    if (aug[i].rows() == 0) continue;
    ExactVector mine;
    for (std::size_t k = 0; k < emb.R; ++k)
      for (auto j : inst.rows_of(i + 1)) mine.push_back(emb.D[k][j]);
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "rows", Payload::matrix(aug[i], net.cost()));
    net.send(PartyId::server(i + 1), PartyId::coordinator(), "weights", Payload::scalars(mine, net.cost()));
  }
  net.next_round();
  auto res = solve_embedded_lp(inst, emb.D);
  RegressionResult out;
  out.method = "lp-embed";
  out.eps = eps;
  out.p = p;
  out.x = std::move(res.x);
  out.objective = residual_norm(inst, out.x, p);
  out.stats["blocks"] = static_cast<double>(emb.R);
  out.stats["precision_bits"] = emb.q;
  out.stats["iterations"] = static_cast<double>(res.iterations);
  out.stats["active_constraints"] = static_cast<double>(res.active);
  out.stats["cuts_rounds"] = static_cast<double>(res.passes);
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::regression
