#include "asymlora/gen_bound.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "asymlora/errors.h"

namespace asymlora {

void FineTuneSpec::validate() const {
  if (layers.empty()) {
    throw ValidationError("spec: at least one tuned layer is required");
  }
  for (const auto &layer : layers) {
    if (layer.d_in < 1 || layer.d_out < 1) {
      throw ValidationError("spec: layer dimensions must be >= 1");
    }
    if (rank < 0 || rank > std::min(layer.d_in, layer.d_out)) {
      throw ValidationError("spec: rank " + std::to_string(rank) +
                            " exceeds min(d_in, d_out) of a layer");
    }
  }
  if (quant_bits < 1) {
    throw ValidationError("spec: quantization bits must be >= 1");
  }
  if (n_samples < 1) {
    throw ValidationError("spec: sample count must be >= 1");
  }
  if (!(sub_gaussian_sigma > 0.0)) {
    throw ValidationError("spec: sub-Gaussian sigma must be positive");
  }
}

std::int64_t tuned_dimension(const FineTuneSpec &spec) {
  std::int64_t total = 0;
  for (const auto &layer : spec.layers) {
    switch (spec.mode) {
    case TuneMode::BA:
      total += layer.d_in + layer.d_out;
      break;
    case TuneMode::B_only:
      total += layer.d_out;
      break;
    case TuneMode::A_only:
      total += layer.d_in;
      break;
    }
  }
  return total;
}

double generalization_bound(const FineTuneSpec &spec) {
  spec.validate();
  const double sigma = spec.sub_gaussian_sigma;
  const double bits = static_cast<double>(spec.rank) *
                      static_cast<double>(spec.quant_bits) *
                      static_cast<double>(tuned_dimension(spec));
  return std::sqrt(2.0 * sigma * sigma * std::numbers::ln2 * bits /
                   static_cast<double>(spec.n_samples));
}

std::int64_t trainable_params(const FineTuneSpec &spec) {
  spec.validate();
  return spec.rank * tuned_dimension(spec);
}

std::int64_t matched_rank(const FineTuneSpec &spec_ba, MatchCriterion criterion) {
  spec_ba.validate();
  if (spec_ba.mode != TuneMode::BA) {
    throw ValidationError("matched_rank: reference spec must tune BA");
  }
  std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  for (const auto &layer : spec_ba.layers) {
    cap = std::min(cap, std::min(layer.d_in, layer.d_out));
  }
  const std::int64_t budget_params = trainable_params(spec_ba);
  const double budget_bound = generalization_bound(spec_ba);

  FineTuneSpec candidate = spec_ba;
  candidate.mode = TuneMode::B_only;
  std::int64_t best = 0;
  for (std::int64_t r = 0; r <= cap; ++r) {
    candidate.rank = r;
    const bool fits = criterion == MatchCriterion::equal_params
                          ? trainable_params(candidate) <= budget_params
                          : generalization_bound(candidate) <=
                                budget_bound * (1.0 + 1e-12);
    if (!fits) {
      break;  // both quantities increase with r
    }
    best = r;
  }
  return best;
}

const char *to_string(TuneMode mode) {
  switch (mode) {
  case TuneMode::BA:
    return "BA";
  case TuneMode::B_only:
    return "B-only";
  case TuneMode::A_only:
    return "A-only";
  }
  return "?";
}

TuneMode parse_tune_mode(const std::string &text) {
  if (text == "BA") return TuneMode::BA;
  if (text == "B-only" || text == "B") return TuneMode::B_only;
  if (text == "A-only" || text == "A") return TuneMode::A_only;
  throw ValidationError("unknown tuning mode '" + text + "' (BA, B-only, A-only)");
}

} // namespace asymlora
