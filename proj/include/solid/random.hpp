#pragma once

#include <cstdint>
#include <random>

namespace solid {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, stream) pair. Every consumer of randomness
/// in a run gets its own stream so that changing how much one part draws does not
/// perturb the others.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5011du};
  return Rng(seq);
}

inline double draw_uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double draw_normal(Rng& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline double draw_gamma_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double draw_gamma_scale(Rng& rng, double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

inline double draw_beta(Rng& rng, double a, double b) {
  const double x = draw_gamma_scale(rng, a, 1.0);
  const double y = draw_gamma_scale(rng, b, 1.0);
  return x / (x + y);
}

inline bool draw_bernoulli(Rng& rng, double prob) { return draw_uniform(rng) < prob; }

}  // namespace solid
