#pragma once

#include "commopt/commsim/rng.hpp"
#include "commopt/lpsolve/clarkson.hpp"

#include <cmath>
#include <stdexcept>

namespace commopt::lp {

// trunc_t of a N(0, sigma^2) draw: nearest multiple of 2^-t, ties upward.
inline Rational sample_discrete_gaussian(double sigma, unsigned t, RngStream& rng) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("discrete gaussian: sigma must be in (0, 1]");
  if (t < 1) throw std::invalid_argument("discrete gaussian: t must be >= 1");
  const Rational g = from_double(sigma * rng.normal());
  const Rational grid(BigInt(1), BigInt(1) << t);
  return detail::round_to_grid(g, grid);
}

inline Rational sample_discrete_gaussian(double sigma, unsigned t, std::uint64_t seed) {
  RngStream rng(seed);
  return sample_discrete_gaussian(sigma, t, rng);
}

struct PerturbedLP {
  Instance base;
  double sigma = 0.25;
  unsigned t = 60;
  std::uint64_t noise_seed = 0;
};

inline constexpr std::uint64_t kNoiseTag = 0x4e01;

// The perturbed instance (A + G) x <= b; G row-major from one shared stream.
inline Instance perturbed_instance(const PerturbedLP& plp) {
  Instance out = plp.base;
  RngStream rng = RngStream(plp.noise_seed).split(kNoiseTag);
  for (std::size_t r = 0; r < out.n; ++r)
    for (std::size_t j = 0; j < out.d; ++j) out.A(r, j) += sample_discrete_gaussian(plp.sigma, plp.t, rng);
  out.kind = "lp-perturbed";
  return out;
}

inline unsigned min_truncation(const Instance& base, double sigma) {
  const double v = std::log2(static_cast<double>(base.n * base.d) / sigma) + static_cast<double>(base.L);
  return static_cast<unsigned>(std::ceil(2.0 * v));
}

// delta = 2^-(2L + ceil log2(nd) + ceil log2(1/sigma) + extra)
inline Rational rounding_grid(const Instance& base, double sigma, unsigned extra = 40) {
  const std::uint64_t e = 2 * base.L + ceil_log2(base.n * base.d) +
                          static_cast<std::uint64_t>(std::ceil(std::log2(1.0 / sigma))) + extra;
  return Rational(BigInt(1), BigInt(1) << static_cast<mp_bitcnt_t>(e));
}

struct SmoothedConfig {
  ClarksonConfig clarkson;
  unsigned delta_extra = 40;
};

// Clarkson on the perturbed instance with the broadcast solution rounded to
// the delta grid. The reported solution is the unrounded x_R.
inline ProtocolOutcome smoothed_clarkson(const PerturbedLP& plp, Mode mode, std::uint64_t seed,
                                         SmoothedConfig cfg = {}, std::vector<ClarksonStep>* trace = nullptr) {
  if (plp.t < min_truncation(plp.base, plp.sigma))
    throw std::invalid_argument("smoothed_clarkson: truncation t is too small for n, d, sigma, L");
  const Instance inst = perturbed_instance(plp);
  const Rational delta = rounding_grid(plp.base, plp.sigma, cfg.delta_extra);
  auto out = detail::clarkson_core(inst, mode, seed, cfg.clarkson, delta, trace);
  out.stats["delta_log2"] = -static_cast<double>(bit_length(BigInt(delta.get_den())) - 1);
  return out;
}

}  // namespace commopt::lp
