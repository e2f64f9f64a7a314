#pragma once

#include <cstdint>
#include <random>

#include "asymlora/types.h"

namespace asymlora {

/// Stream splitting rule: the seed of substream `stream` under `seed` is
/// splitmix64(splitmix64(seed) + (stream + 1) * 0x9E3779B97F4A7C15).
/// Every trial, Monte Carlo chunk, or frame draw derives its own seed this
/// way, so results do not depend on the order or thread in which work runs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::uint64_t splitmix64(std::uint64_t x);

/// Seedable generator with a fully specified output sequence.
///
/// Uniform bits come from std::mt19937_64, whose sequence is fixed by the
/// standard. Doubles and normals are derived here rather than through the
/// std:: distributions, whose algorithms vary between standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in the open interval (0, 1), 53 bits of resolution.
  double uniform();

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  /// rows x cols matrix of i.i.d. N(0, stddev^2), filled column-major.
  Matrix gaussian(Index rows, Index cols, double stddev = 1.0);

private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

} // namespace asymlora
