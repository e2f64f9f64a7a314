#include "asymlora/harness/toy_family.h"

#include <cmath>

#include "asymlora/errors.h"
#include "asymlora/random.h"
#include "asymlora/stiefel.h"

namespace asymlora::harness {

ToyFamily::ToyFamily(const ToyFamilyOptions &options, std::uint64_t seed)
    : options_(options) {
  if (options.dim < 1 || options.classes < 2 || options.dim % options.classes != 0) {
    throw ValidationError("toy family: classes must divide dim");
  }
  if (options.input_rank < 0 || options.input_rank > options.dim ||
      options.delta_rank < 0 || options.delta_rank > options.dim) {
    throw ValidationError("toy family: ranks must lie in [0, dim]");
  }
  if (options.train_samples < 1 || options.test_samples < 1) {
    throw ValidationError("toy family: sample counts must be >= 1");
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(options.dim));
  Rng rng(seed);
  w1_ = rng.gaussian(options.dim, options.dim, options.hidden_gain * inv_sqrt);
  w0_ = rng.gaussian(options.dim, options.dim, inv_sqrt);
  if (options.input_rank > 0) {
    mixing_ = rng.gaussian(options.dim, options.input_rank);
  }
}

GlmLoss ToyFamily::loss() const {
  return GlmLoss::multi_head_logistic(options_.dim / options_.classes,
                                      options_.classes);
}

Matrix ToyFamily::features(const Matrix &inputs) const {
  return (inputs * w1_.transpose()).array().tanh().matrix();
}

LabeledBatch ToyFamily::sample_batch(const Matrix &w_targ, Index n,
                                     std::uint64_t seed) const {
  Rng rng(seed);
  const Index d = options_.dim;
  Matrix inputs;
  if (options_.input_rank > 0) {
    inputs = rng.gaussian(n, options_.input_rank) * mixing_.transpose() +
             rng.gaussian(n, d, options_.input_noise);
  } else {
    inputs = rng.gaussian(n, d);
  }
  const Matrix h = features(inputs);
  const Index k = options_.classes;
  const Index heads = d / k;
  std::vector<int> labels(static_cast<std::size_t>(n * heads));
  for (Index i = 0; i < n; ++i) {
    const Vector probs = softmax_probs(w_targ, h.row(i).transpose(), k);
    for (Index head = 0; head < heads; ++head) {
      const double u = rng.uniform();
      double cumulative = 0.0;
      int label = static_cast<int>(k - 1);
      for (Index c = 0; c < k; ++c) {
        cumulative += probs(head * k + c);
        if (u < cumulative) {
          label = static_cast<int>(c);
          break;
        }
      }
      labels[static_cast<std::size_t>(i * heads + head)] = label;
    }
  }
  return make_classification_batch(h, labels, k, heads);
}

ToyTask ToyFamily::task(std::uint64_t task_seed) const {
  ToyTask t;
  const Index d = options_.dim;
  t.delta = options_.delta_rank > 0
                ? random_low_rank(d, d, options_.delta_rank, options_.delta_scale,
                                  derive_seed(task_seed, 0))
                : Matrix::Zero(d, d);
  const Matrix w_targ = w0_ + t.delta;
  t.train = sample_batch(w_targ, options_.train_samples, derive_seed(task_seed, 1));
  t.test = sample_batch(w_targ, options_.test_samples, derive_seed(task_seed, 2));
  return t;
}

} // namespace asymlora::harness
