#pragma once

#include <vector>

#include "asymlora/adapter.h"
#include "asymlora/stiefel.h"
#include "asymlora/types.h"

namespace asymlora {

/// Componentwise map f applied to the logits z = W x.
enum class OutputMap { identity, tanh };

/// Convex potential h. log_sum_exp is applied independently to consecutive
/// blocks of `head_size` outputs and summed, so one block gives multiclass
/// logistic regression and several blocks give independent classifiers that
/// share one weight matrix.
enum class Potential { log_sum_exp, half_squared_norm };

/// Loss of the form sum_i h(f(W x_i)) - y_i^T f(W x_i).
struct GlmLoss {
  OutputMap output_map = OutputMap::identity;
  Potential potential = Potential::log_sum_exp;
  Index output_dim = 0;  // K
  Index head_size = 0;   // 0 means one head spanning all K outputs

  static GlmLoss logistic(Index classes);
  static GlmLoss multi_head_logistic(Index heads, Index classes_per_head);
  static GlmLoss least_squares(Index outputs);

  Index block_size() const { return head_size > 0 ? head_size : output_dim; }
  Index heads() const { return output_dim / block_size(); }
  void validate() const;

  Vector map(const Vector &z) const;
  /// Diagonal of the Jacobian J_f(z).
  Vector map_derivative(const Vector &z) const;
  double potential_value(const Vector &v) const;
  Vector potential_gradient(const Vector &v) const;
};

/// Rows of `x` are inputs x_i, rows of `y` the targets y_i.
struct LabeledBatch {
  Matrix x;  // n x d_in
  Matrix y;  // n x K
  /// When set, every head block of every row of y must be one-hot.
  bool one_hot = false;

  Index size() const { return x.rows(); }
  void validate(const GlmLoss &glm) const;
};

/// One-hot rows for class labels; with several heads, labels are laid out
/// row-major as labels[i * heads + h].
LabeledBatch make_classification_batch(const Matrix &x,
                                       const std::vector<int> &labels,
                                       Index classes_per_head, Index heads = 1);

double loss(const Matrix &w, const LabeledBatch &batch, const GlmLoss &glm);

/// sum_i J_f(W x_i)^T [grad h(f(W x_i)) - y_i] x_i^T
Matrix grad_W(const Matrix &w, const LabeledBatch &batch, const GlmLoss &glm);

/// Gradient in B of the loss at W0 + B Q; the inputs enter projected as Q x_i.
Matrix grad_B_frozen_A(const Matrix &b, const OrthonormalFrame &q,
                       const Matrix &w0, const LabeledBatch &batch,
                       const GlmLoss &glm);

/// Gradient in A of the loss at W0 + U A; the output fit term is projected by U^T.
Matrix grad_A_frozen_B(const Matrix &a, const OrthonormalFrame &u,
                       const Matrix &w0, const LabeledBatch &batch,
                       const GlmLoss &glm);

/// Softmax of W x with max subtraction; with head_size > 0 each block of
/// head_size logits is normalized on its own.
Vector softmax_probs(const Matrix &w, const Vector &x, Index head_size = 0);

struct TrainOptions {
  double learning_rate = 1e-2;
  Index steps = 100;
  double divergence_limit = 1e12;
};

struct TrainTrace {
  /// Mean per-sample loss before the first step and after every step.
  std::vector<double> losses;
  AdapterState adapter;
};

/// Full-batch gradient descent on the mean loss of W0 + (alpha/r) B A. Only
/// the factors not frozen by adapter.mode move. Throws DivergenceError when
/// the loss exceeds options.divergence_limit or stops being finite.
TrainTrace train(const LabeledBatch &batch, const Matrix &w0,
                 const AdapterState &adapter, const GlmLoss &glm,
                 const TrainOptions &options);

} // namespace asymlora
