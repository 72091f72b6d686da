#pragma once

#include "commopt/commsim/instance.hpp"
#include "commopt/commsim/rng.hpp"
#include "commopt/exactnum/echelon.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace commopt::instances {

enum class PartitionPolicy { round_robin, random, one_heavy };

inline PartitionPolicy parse_policy(const std::string& s) {
  if (s == "round-robin" || s == "round_robin") return PartitionPolicy::round_robin;
  if (s == "random") return PartitionPolicy::random;
  if (s == "one-heavy" || s == "one_heavy") return PartitionPolicy::one_heavy;
  throw std::invalid_argument("unknown partition policy: " + s);
}

struct GenSpec {
  std::string kind = "linsys-feasible";
  std::size_t n = 8;
  std::size_t d = 3;
  std::size_t L = 8;
  std::size_t s = 2;
  std::uint64_t seed = 0;
  PartitionPolicy policy = PartitionPolicy::round_robin;

  void validate() const {
    if (d < 1 || s < 1 || L < 1 || n < 1) throw std::invalid_argument("GenSpec: n, d, s, L must be positive");
    // Linear systems may be underdetermined; everything else needs n >= d.
    if (kind.rfind("linsys", 0) != 0 && n < d) throw std::invalid_argument("GenSpec: n must be >= d");
  }
};

// Uniform integer in [-2^L, 2^L].
inline BigInt uniform_signed_bits(RngStream& rng, std::size_t L) {
  if (L <= 61) {
    const std::int64_t top = std::int64_t{1} << L;
    return BigInt(static_cast<long>(rng.uniform_int(-top, top)));
  }
  BigInt range = (BigInt(1) << (L + 1)) + 1;
  const std::size_t words = (L + 2 + 63) / 64;
  while (true) {
    BigInt v = 0;
    for (std::size_t w = 0; w < words; ++w) {
      v <<= 64;
      std::uint64_t x = rng.next_u64();
      v += BigInt(static_cast<unsigned long>(x));
    }
    v >>= static_cast<mp_bitcnt_t>(words * 64 - (L + 2));
    if (v < range) return v - (BigInt(1) << L);
  }
}

inline std::vector<std::size_t> make_partition(std::size_t n, std::size_t s, PartitionPolicy policy, RngStream& rng) {
  std::vector<std::size_t> part(n);
  switch (policy) {
    case PartitionPolicy::round_robin:
      for (std::size_t r = 0; r < n; ++r) part[r] = 1 + r % s;
      break;
    case PartitionPolicy::random:
      for (std::size_t r = 0; r < n; ++r) part[r] = 1 + rng.uniform_below(s);
      break;
    case PartitionPolicy::one_heavy: {
      // Server 1 holds the first half; the rest is dealt round-robin.
      const std::size_t heavy = s == 1 ? n : (n + 1) / 2;
      for (std::size_t r = 0; r < n; ++r) part[r] = r < heavy ? 1 : 2 + (r - heavy) % (s - 1);
      break;
    }
  }
  return part;
}

inline ExactMatrix random_matrix(std::size_t n, std::size_t d, std::size_t L, RngStream& rng) {
  ExactMatrix a(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = Rational(uniform_signed_bits(rng, L));
  return a;
}

inline ExactVector random_sign_vector(std::size_t d, RngStream& rng) {
  ExactVector x(d);
  for (auto& v : x) v = Rational(static_cast<long>(rng.uniform_int(-1, 1)));
  return x;
}

// Kinds: linsys-feasible, linsys-infeasible, regression, lp-bounded.
inline Instance gen_random(const GenSpec& spec) {
  spec.validate();
  RngStream rng(spec.seed);
  RngStream part_rng = rng.split(1);
  const std::size_t n = spec.n, d = spec.d, L = spec.L;
  ExactMatrix a;
  ExactVector b;
  std::optional<ExactVector> c;

  if (spec.kind == "linsys-feasible") {
    a = random_matrix(n, d, L, rng);
    b = multiply(a, random_sign_vector(d, rng));
  } else if (spec.kind == "linsys-infeasible") {
    a = random_matrix(n, d, L, rng);
    b.resize(n);
    bool done = false;
    if (n > d) {
      for (int attempt = 0; attempt < 8 && !done; ++attempt) {
        for (auto& v : b) v = Rational(uniform_signed_bits(rng, L));
        done = rank_and_solve(a, b).infeasible;
      }
    }
    if (!done) {
      // Force a contradiction: the last row repeats the first with a shifted rhs.
      b = multiply(a, random_sign_vector(d, rng));
      if (n == 1) {
        for (std::size_t j = 0; j < d; ++j) a(0, j) = 0;
        b[0] = 1;
      } else {
        for (std::size_t j = 0; j < d; ++j) a(n - 1, j) = a(0, j);
        b[n - 1] = b[0] + 1;
      }
    }
  } else if (spec.kind == "regression") {
    a = random_matrix(n, d, L, rng);
    b.resize(n);
    for (auto& v : b) v = Rational(uniform_signed_bits(rng, L));
  } else if (spec.kind == "lp-bounded") {
    // Random halfspaces with an interior point x0 in {-1,0,1}^d, plus a box.
    ExactMatrix body = random_matrix(n, d, L, rng);
    ExactVector x0 = random_sign_vector(d, rng);
    ExactVector ax = multiply(body, x0);
    const std::int64_t top = L <= 61 ? (std::int64_t{1} << L) : (std::int64_t{1} << 61);
    a = ExactMatrix(n + 2 * d, d, Rational(0));
    b.resize(n + 2 * d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) a(i, j) = body(i, j);
      b[i] = ax[i] + Rational(static_cast<long>(rng.uniform_int(1, top)));
    }
    for (std::size_t j = 0; j < d; ++j) {
      a(n + 2 * j, j) = 1;
      a(n + 2 * j + 1, j) = -1;
      b[n + 2 * j] = Rational(static_cast<long>(top));
      b[n + 2 * j + 1] = Rational(static_cast<long>(top));
    }
    c = ExactVector(d);
    for (auto& v : *c) v = Rational(uniform_signed_bits(rng, L));
  } else {
    throw std::invalid_argument("unknown instance kind: " + spec.kind);
  }

  Instance inst;
  inst.kind = spec.kind;
  inst.n = a.rows();
  inst.d = d;
  inst.s = spec.s;
  inst.A = std::move(a);
  inst.b = std::move(b);
  inst.c = std::move(c);
  inst.partition = make_partition(inst.n, spec.s, spec.policy, part_rng);
  inst.L = std::max<std::size_t>(entry_bits(inst), 1);
  inst.validate();
  return inst;
}

// Points m_i = (i / 2^L, 1 - i^2 / (2 * 4^L)), scaled by 2 * 4^L to integers.
inline std::pair<BigInt, BigInt> hard_point_scaled(std::size_t i, std::size_t L) {
  BigInt two_l = BigInt(1) << L;
  BigInt scale = 2 * two_l * two_l;
  return {2 * two_l * BigInt(static_cast<unsigned long>(i)), scale - BigInt(static_cast<unsigned long>(i)) * BigInt(static_cast<unsigned long>(i))};
}

inline std::pair<Rational, Rational> hard_point(std::size_t i, std::size_t L) {
  auto [x, y] = hard_point_scaled(i, L);
  BigInt two_l = BigInt(1) << L;
  BigInt scale = 2 * two_l * two_l;
  return {make_rational(x, scale), make_rational(y, scale)};
}

inline std::size_t hard_index_limit(std::size_t L) {
  const std::size_t e = L / 100;
  return e >= 63 ? SIZE_MAX : (std::size_t{1} << e);
}

// Sets S_1..S_{s-1} go to servers 1..s-1 as constraints <m_i, x> <= 1; server
// s pins x = m_u with four inequalities. Feasible iff u is in no S_j.
inline Instance gen_lp_hard_d2(const std::vector<std::vector<std::size_t>>& sets, std::size_t u, std::size_t L) {
  const std::size_t limit = hard_index_limit(L);
  auto check = [&](std::size_t i) {
    if (i < 1 || i > limit) throw std::out_of_range("hard LP index outside [1, 2^{L/100}]");
  };
  check(u);
  const std::size_t s = sets.size() + 1;
  BigInt two_l = BigInt(1) << L;
  BigInt scale = 2 * two_l * two_l;
  ExactMatrix a(0, 2);
  ExactVector b;
  std::vector<std::size_t> part;
  for (std::size_t j = 0; j < sets.size(); ++j) {
    for (auto i : sets[j]) {
      check(i);
      auto [x, y] = hard_point_scaled(i, L);
      ExactVector row = {Rational(x), Rational(y)};
      a.append_row(row);
      b.emplace_back(scale);
      part.push_back(j + 1);
    }
  }
  auto [ux, uy] = hard_point_scaled(u, L);
  ExactVector rows[4] = {{Rational(scale), 0}, {Rational(-scale), 0}, {0, Rational(scale)}, {0, Rational(-scale)}};
  BigInt rhs[4] = {ux, BigInt(-ux), uy, BigInt(-uy)};
  for (int k = 0; k < 4; ++k) {
    a.append_row(rows[k]);
    b.emplace_back(rhs[k]);
    part.push_back(s);
  }
  Instance inst;
  inst.kind = "lp-hard";
  inst.n = a.rows();
  inst.d = 2;
  inst.s = s;
  inst.A = std::move(a);
  inst.b = std::move(b);
  inst.c = ExactVector{0, 0};
  inst.partition = std::move(part);
  inst.L = entry_bits(inst);
  inst.validate();
  return inst;
}

// Exact singularity test for small integer matrices (fraction-free, 128-bit).
inline bool is_singular_small(std::vector<std::vector<__int128>> m) {
  const std::size_t d = m.size();
  __int128 prev = 1;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    while (piv < d && m[piv][k] == 0) ++piv;
    if (piv == d) return true;
    std::swap(m[piv], m[k]);
    for (std::size_t i = k + 1; i < d; ++i) {
      for (std::size_t j = k + 1; j < d; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
      m[i][k] = 0;
    }
    prev = m[k][k];
  }
  return false;
}

// Sum of t independent +-1 draws.
inline long generalized_binomial(std::size_t t, RngStream& rng) {
  long ones = 0;
  std::size_t left = t;
  while (left > 0) {
    const std::size_t take = std::min<std::size_t>(left, 64);
    std::uint64_t bits = rng.next_u64();
    if (take < 64) bits &= (std::uint64_t{1} << take) - 1;
    ones += std::popcount(bits);
    left -= take;
  }
  return 2 * ones - static_cast<long>(t);
}

inline double singularity_trial(std::size_t d, std::size_t t, std::size_t trials, std::uint64_t seed) {
  if (d == 0 || t == 0 || trials == 0) throw std::invalid_argument("singularity_trial: d, t, trials must be positive");
  // Bareiss products are bounded by the square of Hadamard's bound (t sqrt d)^d.
  if (2.0 * static_cast<double>(d) * std::log10(static_cast<double>(t) * std::sqrt(static_cast<double>(d))) > 37.0)
    throw std::invalid_argument("singularity_trial: outside the 128-bit exact range");
  RngStream rng(seed);
  std::size_t singular = 0;
  std::vector<std::vector<__int128>> m(d, std::vector<__int128>(d));
  for (std::size_t k = 0; k < trials; ++k) {
    for (auto& row : m)
      for (auto& v : row) v = generalized_binomial(t, rng);
    singular += is_singular_small(m);
  }
  return static_cast<double>(singular) / static_cast<double>(trials);
}

}  // namespace commopt::instances
