#include <gtest/gtest.h>

#include <cmath>

#include "asymlora/errors.h"
#include "asymlora/gen_bound.h"

using namespace asymlora;

namespace {

FineTuneSpec square(std::int64_t d, std::int64_t layers, std::int64_t r, TuneMode mode) {
  FineTuneSpec spec;
  spec.layers.assign(static_cast<std::size_t>(layers), LayerShape{d, d});
  spec.rank = r;
  spec.mode = mode;
  return spec;
}

// Direct substitution into sqrt(2 r q sigma^2 ln2 / n * D).
double hand_bound(double r, double q, double sigma, double n, double dims) {
  return std::sqrt(2.0 * r * q * sigma * sigma * std::log(2.0) / n * dims);
}

} // namespace

TEST(Bound, ZeroRankIsZero) {
  for (const auto mode : {TuneMode::BA, TuneMode::B_only, TuneMode::A_only}) {
    const auto spec = square(16, 2, 0, mode);
    EXPECT_EQ(generalization_bound(spec), 0.0);
    EXPECT_EQ(trainable_params(spec), 0);
  }
}

TEST(Bound, SquareLayersGainRootTwo) {
  for (std::int64_t d : {8, 64, 1024}) {
    for (std::int64_t r : {1, 4, 8}) {
      const double ba = generalization_bound(square(d, 3, r, TuneMode::BA));
      const double b = generalization_bound(square(d, 3, r, TuneMode::B_only));
      EXPECT_NEAR(b / ba, 1.0 / std::sqrt(2.0), 1e-12);
    }
  }
}

TEST(Bound, HandEvaluatedExample) {
  FineTuneSpec spec = square(1024, 24, 8, TuneMode::BA);
  spec.n_samples = 10000;
  EXPECT_NEAR(generalization_bound(spec), hand_bound(8, 16, 1, 10000, 24.0 * 2048), 1e-12);
  spec.mode = TuneMode::B_only;
  EXPECT_NEAR(generalization_bound(spec), hand_bound(8, 16, 1, 10000, 24.0 * 1024), 1e-12);
  // sqrt(2 * 8 * 16 * ln2 / 10000 * 49152)
  EXPECT_NEAR(generalization_bound(square(1024, 24, 8, TuneMode::BA)) / std::sqrt(10000.0),
              hand_bound(8, 16, 1, 10000, 49152), 1e-12);
}

TEST(Bound, ModeOrderingAndMonotonicity) {
  FineTuneSpec spec;
  spec.layers = {{768, 3072}, {3072, 768}, {512, 512}};
  for (std::int64_t r = 1; r <= 16; ++r) {
    spec.rank = r;
    spec.mode = TuneMode::BA;
    const double ba = generalization_bound(spec);
    spec.mode = TuneMode::B_only;
    const double b = generalization_bound(spec);
    spec.mode = TuneMode::A_only;
    const double a = generalization_bound(spec);
    EXPECT_LE(b, ba);
    EXPECT_LE(a, ba);
    spec.mode = TuneMode::BA;
    FineTuneSpec bigger = spec;
    bigger.rank = r + 1;
    EXPECT_LT(ba, generalization_bound(bigger));
    bigger = spec;
    bigger.quant_bits = 17;
    EXPECT_LT(ba, generalization_bound(bigger));
    bigger = spec;
    bigger.sub_gaussian_sigma = 1.5;
    EXPECT_LT(ba, generalization_bound(bigger));
    bigger = spec;
    bigger.n_samples = 2;
    EXPECT_GT(ba, generalization_bound(bigger));
  }
}

TEST(Bound, SampleScaling) {
  FineTuneSpec spec = square(100, 1, 4, TuneMode::BA);
  spec.n_samples = 50;
  const double base = generalization_bound(spec);
  for (std::int64_t k : {2, 3, 10}) {
    FineTuneSpec more = spec;
    more.n_samples = 50 * k * k;
    EXPECT_NEAR(generalization_bound(more), base / static_cast<double>(k), 1e-15 * base);
  }
}

TEST(Params, SquareRatioAndSubstitution) {
  const auto ba = square(256, 4, 8, TuneMode::BA);
  const auto b = square(256, 4, 8, TuneMode::B_only);
  EXPECT_EQ(2 * trainable_params(b), trainable_params(ba));
  EXPECT_EQ(static_cast<double>(trainable_params(b)) / static_cast<double>(trainable_params(ba)), 0.5);

  FineTuneSpec spec;
  spec.layers = {{768, 3072}};
  spec.rank = 4;
  EXPECT_EQ(trainable_params(spec), 15360);
  EXPECT_EQ(tuned_dimension(spec), 3840);
  spec.mode = TuneMode::B_only;
  EXPECT_EQ(trainable_params(spec), 12288);
  spec.mode = TuneMode::A_only;
  EXPECT_EQ(trainable_params(spec), 3072);
}

TEST(MatchedRank, SquareLayersDouble) {
  const auto spec = square(1024, 6, 8, TuneMode::BA);
  EXPECT_EQ(matched_rank(spec, MatchCriterion::equal_params), 16);
  EXPECT_EQ(matched_rank(spec, MatchCriterion::equal_bound), 16);
}

TEST(MatchedRank, MixedLayersMatchIntegerSearch) {
  FineTuneSpec spec;
  spec.layers = {{768, 3072}, {3072, 768}, {100, 300}};
  const std::int64_t sum_io = 768 + 3072 + 3072 + 768 + 100 + 300;
  const std::int64_t sum_out = 3072 + 768 + 300;
  for (std::int64_t r = 0; r <= 20; ++r) {
    spec.rank = r;
    const std::int64_t expected = std::min<std::int64_t>(r * sum_io / sum_out, 100);
    EXPECT_EQ(matched_rank(spec, MatchCriterion::equal_params), expected);
    FineTuneSpec b = spec;
    b.mode = TuneMode::B_only;
    b.rank = expected;
    EXPECT_LE(trainable_params(b), trainable_params(spec));
  }
}

TEST(MatchedRank, CapsAtLayerDimension) {
  const auto spec = square(12, 1, 8, TuneMode::BA);
  EXPECT_EQ(matched_rank(spec, MatchCriterion::equal_params), 12);
}

TEST(FineTuneSpec, Validation) {
  auto spec = square(8, 1, 9, TuneMode::BA);
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.rank = 2;
  spec.n_samples = 0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.n_samples = 1;
  spec.quant_bits = 0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.quant_bits = 16;
  spec.sub_gaussian_sigma = 0.0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.sub_gaussian_sigma = 1.0;
  spec.layers.clear();
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(TuneModeNames, RoundTrip) {
  for (const auto mode : {TuneMode::BA, TuneMode::B_only, TuneMode::A_only}) {
    EXPECT_EQ(parse_tune_mode(to_string(mode)), mode);
  }
  EXPECT_EQ(parse_tune_mode("B"), TuneMode::B_only);
  EXPECT_THROW(parse_tune_mode("C"), ValidationError);
}
