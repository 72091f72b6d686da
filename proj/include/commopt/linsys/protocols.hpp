#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/network.hpp"
#include "commopt/commsim/outcome.hpp"
#include "commopt/commsim/rng.hpp"
#include "commopt/exactnum/echelon.hpp"
#include "commopt/exactnum/primes.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace commopt::linsys {

inline const MessageSchema& schema() {
  static const MessageSchema s = {
      {"equation", PayloadType::integers}, {"equation_mod_p", PayloadType::field},
      {"prime", PayloadType::count},       {"hash_vector", PayloadType::field},
      {"verdict", PayloadType::verdict},   {"done", PayloadType::verdict},
      {"skip", PayloadType::verdict},
  };
  return s;
}

// Integer form (coefficients then rhs) of row r of a server's system.
inline std::vector<BigInt> integer_equation(const ServerView& v, std::size_t r) {
  ExactVector full = v.A.row_vector(r);
  full.push_back(v.b[r]);
  return primitive_integer_row(full);
}

inline ExactVector as_rationals(const std::vector<BigInt>& row, std::size_t from, std::size_t to) {
  ExactVector out;
  for (std::size_t j = from; j < to; ++j) out.emplace_back(row[j]);
  return out;
}

struct Config {
  unsigned prime_exponent = 2;
  double k_multiplier = 8.0;  // K = ceil(k_multiplier * log2(d + 2))
};

// Servers take turns; each one broadcasts its equations that are independent
// of the shared set C, or a 1-bit infeasibility verdict.
inline ProtocolOutcome det_solve(const Instance& inst, Mode mode) {
  auto views = split_servers(inst);
  Network net(mode, inst.s);
  ExactEchelon C(inst.d);
  ProtocolOutcome out;
  bool infeasible = false;
  for (const auto& v : views) {
    const PartyId me = PartyId::server(v.index);
    for (std::size_t r = 0; r < v.size() && !infeasible; ++r) {
      auto eq = integer_equation(v, r);
      ExactVector coeffs = as_rationals(eq, 0, inst.d);
      Rational rhs(eq[inst.d]);
      RowStatus st = C.classify(coeffs, rhs);
      if (st == RowStatus::inconsistent) {
        infeasible = true;
        net.broadcast(me, "verdict", Payload::verdict());
      } else if (st == RowStatus::independent) {
        net.broadcast(me, "equation", Payload::integers(eq));
        C.insert(coeffs, rhs);
      }
    }
    net.next_round();
    if (infeasible) break;
    net.send(me, PartyId::coordinator(), "done", Payload::verdict());
  }
  out.iterations = C.rank();
  out.stats["equations"] = static_cast<double>(C.rank());
  if (infeasible) {
    out.status = Status::infeasible;
  } else {
    out.status = Status::ok;
    out.set_exact(C.solve());
  }
  out.transcript = net.finish();
  return out;
}

// Same turn structure over F_p for one random prime p.
inline ProtocolOutcome rand_feasibility(const Instance& inst, Mode mode, std::uint64_t seed, Config cfg = {}) {
  auto views = split_servers(inst);
  Network net(mode, inst.s);
  RngStream coord = RngStream(seed).split(kCoordinatorTag);
  const std::uint64_t p = random_prime(default_prime_bound(inst.d, inst.L, cfg.prime_exponent), coord);
  net.broadcast(PartyId::coordinator(), "prime", Payload::count(p));
  net.next_round();
  ModEchelon C(inst.d, p);
  bool infeasible = false;
  for (const auto& v : views) {
    const PartyId me = PartyId::server(v.index);
    for (std::size_t r = 0; r < v.size() && !infeasible; ++r) {
      std::vector<std::uint64_t> eq;
      for (const auto& x : integer_equation(v, r)) eq.push_back(reduce_mod(x, p));
      RowStatus st = C.classify(eq);
      if (st == RowStatus::inconsistent) {
        infeasible = true;
        net.broadcast(me, "verdict", Payload::verdict());
      } else if (st == RowStatus::independent) {
        net.broadcast(me, "equation_mod_p", Payload::field(eq));
        C.insert(eq);
      }
    }
    net.next_round();
    if (infeasible) break;
    net.send(me, PartyId::coordinator(), "done", Payload::verdict());
  }
  ProtocolOutcome out;
  out.status = infeasible ? Status::infeasible : Status::feasible;
  out.iterations = C.rank();
  out.stats["prime"] = static_cast<double>(p);
  out.transcript = net.finish();
  return out;
}

// Randomized solve. Each server reduces its rows to an independent set S_i and
// proposes random +-1 combinations of S_i. The coordinator keeps C exactly and
// mod p, and hands the active server a random vector z from the annihilator of
// C mod p; a combination c with z.c = 0 (mod p) lies in span(C) with high
// probability and is dropped locally, otherwise the full equation is sent.
inline ProtocolOutcome rand_solve(const Instance& inst, std::uint64_t seed, Mode mode = Mode::coordinator,
                                  Config cfg = {}) {
  auto views = split_servers(inst);
  Network net(mode, inst.s);
  RngStream root(seed);
  RngStream coord = root.split(kCoordinatorTag);
  const std::uint64_t p = random_prime(default_prime_bound(inst.d, inst.L, cfg.prime_exponent), coord);
  const std::size_t K = static_cast<std::size_t>(std::ceil(cfg.k_multiplier * std::log2(inst.d + 2.0)));
  const std::size_t d = inst.d;

  ExactEchelon C(d);
  ModEchelon Cp(d, p);
  ProtocolOutcome out;
  bool infeasible = false;
  std::uint64_t full_sent = 0, proposals = 0, false_positives = 0;

  for (const auto& v : views) {
    if (infeasible) break;
    const PartyId me = PartyId::server(v.index);
    RngStream local = root.split(server_tag(v.index));

    // Local exact reduction and feasibility check.
    std::vector<std::vector<BigInt>> S;
    ExactEchelon own(d);
    bool own_bad = false;
    for (std::size_t r = 0; r < v.size(); ++r) {
      auto eq = integer_equation(v, r);
      RowStatus st = own.insert(as_rationals(eq, 0, d), Rational(eq[d]));
      if (st == RowStatus::inconsistent) {
        own_bad = true;
        break;
      }
      if (st == RowStatus::independent) S.push_back(std::move(eq));
    }
    if (own_bad) {
      net.send(me, PartyId::coordinator(), "verdict", Payload::verdict());
      infeasible = true;
      break;
    }
    if (S.empty()) {
      net.send(me, PartyId::coordinator(), "skip", Payload::verdict());
      continue;
    }

    net.send(PartyId::coordinator(), me, "prime", Payload::count(p));
    auto z = Cp.random_annihilator(coord);
    net.send(PartyId::coordinator(), me, "hash_vector", Payload::field(z));
    net.next_round();

    std::size_t failures = 0, accepted = 0;
    while (failures < K && accepted < S.size()) {
      std::vector<BigInt> c(d + 1, BigInt(0));
      for (const auto& t : S) {
        const int r = local.sign();
        for (std::size_t j = 0; j <= d; ++j) {
          if (r > 0) c[j] += t[j];
          else c[j] -= t[j];
        }
      }
      ++proposals;
      std::vector<std::uint64_t> cm;
      for (const auto& x : c) cm.push_back(reduce_mod(x, p));
      if (Cp.dot(cm, z) == 0) {
        ++failures;
        continue;
      }
      net.send(me, PartyId::coordinator(), "equation", Payload::integers(c));
      ++full_sent;
      RowStatus st = C.insert(as_rationals(c, 0, d), Rational(c[d]));
      if (st == RowStatus::inconsistent) {
        infeasible = true;
        net.send(PartyId::coordinator(), me, "verdict", Payload::verdict());
        break;
      }
      if (st == RowStatus::dependent) {
        ++false_positives;
        ++failures;
      } else {
        ++accepted;
        failures = 0;
        Cp.insert(cm);
      }
      z = Cp.random_annihilator(coord);
      net.send(PartyId::coordinator(), me, "hash_vector", Payload::field(z));
      net.next_round();
    }
    if (infeasible) break;
    net.send(me, PartyId::coordinator(), "done", Payload::verdict());
    net.next_round();
  }

  out.iterations = proposals;
  out.stats["full_equations"] = static_cast<double>(full_sent);
  out.stats["false_positives"] = static_cast<double>(false_positives);
  out.stats["prime"] = static_cast<double>(p);
  out.stats["K"] = static_cast<double>(K);
  if (infeasible) {
    out.status = Status::infeasible;
  } else {
    out.status = Status::ok;
    out.set_exact(C.solve());
  }
  out.transcript = net.finish();
  return out;
}

}  // namespace commopt::linsys
