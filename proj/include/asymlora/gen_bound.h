#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace asymlora {

/// Which factors an algorithm tunes: both (BA), B with A frozen to a random
/// Q, or A with B frozen to a random U.
enum class TuneMode { BA, B_only, A_only };

struct LayerShape {
  std::int64_t d_in = 0;
  std::int64_t d_out = 0;
};

/// Input to the mutual-information generalization bound: the tuned layers,
/// rank r, bits per stored parameter q, sample count n and sub-Gaussian
/// constant sigma of the loss.
struct FineTuneSpec {
  std::vector<LayerShape> layers;
  std::int64_t rank = 0;
  std::int64_t quant_bits = 16;
  std::int64_t n_samples = 1;
  double sub_gaussian_sigma = 1.0;
  TuneMode mode = TuneMode::BA;

  /// Throws ValidationError unless all dimensions are >= 1, 0 <= r <=
  /// min(d_in, d_out) for every layer, q >= 1, n >= 1 and sigma > 0.
  void validate() const;
};

/// sum over layers of d_in + d_out (BA), d_out (B only) or d_in (A only).
std::int64_t tuned_dimension(const FineTuneSpec &spec);

/// sqrt(2 r q sigma^2 ln 2 / n * tuned_dimension)
double generalization_bound(const FineTuneSpec &spec);

/// r * tuned_dimension
std::int64_t trainable_params(const FineTuneSpec &spec);

enum class MatchCriterion { equal_params, equal_bound };

/// Largest r_B such that the B-only version of `spec_ba` at rank r_B stays
/// within the BA spec's parameter count or bound, capped at the smallest
/// min(d_in, d_out) over layers. Bounds are compared with a relative
/// tolerance of 1e-12 so exact ties survive rounding.
std::int64_t matched_rank(const FineTuneSpec &spec_ba, MatchCriterion criterion);

const char *to_string(TuneMode mode);
TuneMode parse_tune_mode(const std::string &text);

} // namespace asymlora
