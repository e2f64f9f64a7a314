#pragma once

#include <cstdint>

#include "asymlora/glm.h"
#include "asymlora/types.h"

namespace asymlora::harness {

/// Synthetic fine-tuning family: a fixed two-layer network
/// logits = W0 tanh(W1 x), whose second layer (dim x dim) is adapted.
/// The dim logits form dim / classes independent classifiers of `classes`
/// classes each. Inputs are redundant: x = F z + input_noise * e with
/// z ~ N(0, I_input_rank). Each task shifts the second layer by a random
/// rank-`delta_rank` Delta and samples labels from the shifted model.
struct ToyFamilyOptions {
  Index dim = 32;
  Index classes = 4;
  Index input_rank = 4;  // 0 means isotropic inputs x ~ N(0, I)
  double input_noise = 0.1;
  Index delta_rank = 8;  // 0 gives tasks with no shift
  double delta_scale = 4.0;
  double hidden_gain = 2.0;
  Index train_samples = 256;
  Index test_samples = 1024;
};

struct ToyTask {
  Matrix delta;
  LabeledBatch train;
  LabeledBatch test;
};

class ToyFamily {
public:
  ToyFamily(const ToyFamilyOptions &options, std::uint64_t seed);

  const ToyFamilyOptions &options() const { return options_; }
  const Matrix &pretrained() const { return w0_; }
  GlmLoss loss() const;

  /// Hidden features tanh(W1 x) for a batch of inputs (rows).
  Matrix features(const Matrix &inputs) const;

  /// Task draws come from derive_seed(task_seed, k), independent of the
  /// family seed, so two families share no task randomness.
  ToyTask task(std::uint64_t task_seed) const;

private:
  LabeledBatch sample_batch(const Matrix &w_targ, Index n, std::uint64_t seed) const;

  ToyFamilyOptions options_;
  Matrix w1_;
  Matrix w0_;
  Matrix mixing_;  // F
};

} // namespace asymlora::harness
