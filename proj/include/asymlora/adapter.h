#pragma once

#include <cstdint>

#include "asymlora/types.h"

namespace asymlora {

enum class FreezeMode { freeze_A, freeze_B, train_both };

/// Which factor starts random for train_both: standard puts the Gaussian in A
/// and zeros in B; reversed swaps the two.
enum class InitStyle { standard, reversed };

/// Low-rank adapter W = W0 + (alpha / rank) B A.
struct AdapterState {
  Matrix b;  // d_out x r
  Matrix a;  // r x d_in
  Index rank = 0;
  double alpha = 0.0;
  FreezeMode mode = FreezeMode::train_both;

  double scale() const { return alpha / static_cast<double>(rank); }
  Matrix effective_update() const { return scale() * b * a; }
  void validate() const;
};

struct AdapterInit {
  FreezeMode mode = FreezeMode::train_both;
  InitStyle style = InitStyle::standard;
  /// Standard deviation of the Gaussian factor in train_both;
  /// non-positive means 1/sqrt(d_in) for A (1/sqrt(d_out) for B when reversed).
  double gaussian_std = 0.0;
  /// alpha / rank; 2 reproduces the alpha = 2r convention.
  double scale = 2.0;
};

/// freeze_A: A = Haar Q (r x d_in), B = 0. freeze_B: B = Haar U (d_out x r),
/// A = 0. train_both: Gaussian factor and zero factor per `init.style`.
AdapterState init_adapter(Index d_out, Index d_in, Index rank,
                          const AdapterInit &init, std::uint64_t seed);

const char *to_string(FreezeMode mode);

} // namespace asymlora
