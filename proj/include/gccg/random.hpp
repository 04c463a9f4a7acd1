#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>

namespace gccg {

/// Every sampler in the toolkit draws from an explicitly seeded engine of
/// this type; nothing reads ambient randomness.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform double in [0, 1) with 53 random bits. Unlike
/// std::uniform_real_distribution its output is fixed by the engine state.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n). Lemire-style rejection; n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Draws an index with probability proportional to weights (nonnegative,
/// not all zero). Returns weights.size() when the total is zero.
std::size_t sample_linear(Rng& rng, std::span<const double> weights);

/// Draws an index with probability proportional to exp(log_weights).
/// Returns log_weights.size() when every weight is -inf.
std::size_t sample_log(Rng& rng, std::span<const double> log_weights);

/// Text form of the engine state, for checkpoints.
std::string rng_state(const Rng& rng);
void restore_rng_state(Rng& rng, const std::string& state);

}  // namespace gccg
