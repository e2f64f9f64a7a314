#include "asymlora/glm.h"

#include <cmath>
#include <string>

#include "asymlora/errors.h"
#include "asymlora/random.h"

namespace asymlora {

// ---- adapter ---------------------------------------------------------------

void AdapterState::validate() const {
  if (rank < 1) {
    throw DimensionError("adapter: rank must be >= 1");
  }
  if (b.cols() != rank || a.rows() != rank) {
    throw DimensionError("adapter: B must have r columns and A r rows");
  }
  if (!(alpha > 0.0)) {
    throw ValidationError("adapter: alpha must be positive");
  }
}

AdapterState init_adapter(Index d_out, Index d_in, Index rank,
                          const AdapterInit &init, std::uint64_t seed) {
  if (rank < 1 || rank > std::min(d_out, d_in)) {
    throw DimensionError("init_adapter: need 1 <= rank <= min(d_out, d_in)");
  }
  if (!(init.scale > 0.0)) {
    throw ValidationError("init_adapter: scale must be positive");
  }
  AdapterState state;
  state.rank = rank;
  state.alpha = init.scale * static_cast<double>(rank);
  state.mode = init.mode;
  switch (init.mode) {
  case FreezeMode::freeze_A:
    state.a = sample_stiefel(rank, d_in, Orientation::row_orthonormal, seed).matrix();
    state.b = Matrix::Zero(d_out, rank);
    break;
  case FreezeMode::freeze_B:
    state.b = sample_stiefel(d_out, rank, Orientation::column_orthonormal, seed).matrix();
    state.a = Matrix::Zero(rank, d_in);
    break;
  case FreezeMode::train_both: {
    Rng rng(seed);
    if (init.style == InitStyle::standard) {
      const double sd = init.gaussian_std > 0.0
                            ? init.gaussian_std
                            : 1.0 / std::sqrt(static_cast<double>(d_in));
      state.a = rng.gaussian(rank, d_in, sd);
      state.b = Matrix::Zero(d_out, rank);
    } else {
      const double sd = init.gaussian_std > 0.0
                            ? init.gaussian_std
                            : 1.0 / std::sqrt(static_cast<double>(d_out));
      state.b = rng.gaussian(d_out, rank, sd);
      state.a = Matrix::Zero(rank, d_in);
    }
    break;
  }
  }
  return state;
}

const char *to_string(FreezeMode mode) {
  switch (mode) {
  case FreezeMode::freeze_A:
    return "freeze-A";
  case FreezeMode::freeze_B:
    return "freeze-B";
  case FreezeMode::train_both:
    return "train-both";
  }
  return "?";
}

// ---- loss family -----------------------------------------------------------

GlmLoss GlmLoss::logistic(Index classes) {
  return GlmLoss{OutputMap::identity, Potential::log_sum_exp, classes, 0};
}

GlmLoss GlmLoss::multi_head_logistic(Index heads, Index classes_per_head) {
  return GlmLoss{OutputMap::identity, Potential::log_sum_exp,
                 heads * classes_per_head, classes_per_head};
}

GlmLoss GlmLoss::least_squares(Index outputs) {
  return GlmLoss{OutputMap::identity, Potential::half_squared_norm, outputs, 0};
}

void GlmLoss::validate() const {
  if (output_dim < 1 || head_size < 0) {
    throw DimensionError("glm: output dimension must be positive");
  }
  if (output_dim % block_size() != 0) {
    throw DimensionError("glm: head size must divide the output dimension");
  }
}

Vector GlmLoss::map(const Vector &z) const {
  if (output_map == OutputMap::tanh) {
    return z.array().tanh().matrix();
  }
  return z;
}

Vector GlmLoss::map_derivative(const Vector &z) const {
  if (output_map == OutputMap::tanh) {
    return (1.0 - z.array().tanh().square()).matrix();
  }
  return Vector::Ones(z.size());
}

namespace {

double log_sum_exp(const Eigen::Ref<const Vector> &v) {
  const double top = v.maxCoeff();
  return top + std::log((v.array() - top).exp().sum());
}

void softmax_inplace(Eigen::Ref<Vector> v) {
  const double top = v.maxCoeff();
  v = (v.array() - top).exp().matrix();
  v /= v.sum();
}

} // namespace

double GlmLoss::potential_value(const Vector &v) const {
  if (potential == Potential::half_squared_norm) {
    return 0.5 * v.squaredNorm();
  }
  const Index block = block_size();
  double total = 0.0;
  for (Index start = 0; start < v.size(); start += block) {
    total += log_sum_exp(v.segment(start, block));
  }
  return total;
}

Vector GlmLoss::potential_gradient(const Vector &v) const {
  if (potential == Potential::half_squared_norm) {
    return v;
  }
  const Index block = block_size();
  Vector out = v;
  for (Index start = 0; start < v.size(); start += block) {
    softmax_inplace(out.segment(start, block));
  }
  return out;
}

void LabeledBatch::validate(const GlmLoss &glm) const {
  glm.validate();
  if (x.rows() != y.rows()) {
    throw DimensionError("batch: X and Y have different row counts");
  }
  if (y.cols() != glm.output_dim) {
    throw DimensionError("batch: Y has " + std::to_string(y.cols()) +
                         " columns, loss expects " + std::to_string(glm.output_dim));
  }
  if (!one_hot) {
    return;
  }
  const Index block = glm.block_size();
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index start = 0; start < y.cols(); start += block) {
      const auto seg = y.row(i).segment(start, block);
      const bool binary = ((seg.array() == 0.0) || (seg.array() == 1.0)).all();
      if (!binary || seg.sum() != 1.0) {
        throw ValidationError("batch: row " + std::to_string(i) + " is not one-hot");
      }
    }
  }
}

LabeledBatch make_classification_batch(const Matrix &x,
                                       const std::vector<int> &labels,
                                       Index classes_per_head, Index heads) {
  if (static_cast<Index>(labels.size()) != x.rows() * heads) {
    throw DimensionError("labels: expected one label per row and head");
  }
  LabeledBatch batch{x, Matrix::Zero(x.rows(), classes_per_head * heads), true};
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index h = 0; h < heads; ++h) {
      const int label = labels[static_cast<std::size_t>(i * heads + h)];
      if (label < 0 || label >= classes_per_head) {
        throw ValidationError("labels: class index out of range");
      }
      batch.y(i, h * classes_per_head + label) = 1.0;
    }
  }
  return batch;
}

namespace {

void check_weights(const Matrix &w, const LabeledBatch &batch, const GlmLoss &glm) {
  batch.validate(glm);
  if (w.rows() != glm.output_dim || w.cols() != batch.x.cols()) {
    throw DimensionError("W is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", expected " +
                         std::to_string(glm.output_dim) + "x" +
                         std::to_string(batch.x.cols()));
  }
}

// Row i holds J_f(W x_i)^T [grad h(f(W x_i)) - y_i].
Matrix output_residuals(const Matrix &w, const LabeledBatch &batch,
                        const GlmLoss &glm) {
  const Matrix logits = batch.x * w.transpose();
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Vector z = logits.row(i).transpose();
    const Vector fz = glm.map(z);
    const Vector fit = glm.potential_gradient(fz) - batch.y.row(i).transpose();
    out.row(i) = glm.map_derivative(z).cwiseProduct(fit).transpose();
  }
  return out;
}

} // namespace

double loss(const Matrix &w, const LabeledBatch &batch, const GlmLoss &glm) {
  check_weights(w, batch, glm);
  const Matrix logits = batch.x * w.transpose();
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const Vector fz = glm.map(logits.row(i).transpose());
    total += glm.potential_value(fz) - batch.y.row(i).dot(fz);
  }
  return total;
}

Matrix grad_W(const Matrix &w, const LabeledBatch &batch, const GlmLoss &glm) {
  check_weights(w, batch, glm);
  return output_residuals(w, batch, glm).transpose() * batch.x;
}

Matrix grad_B_frozen_A(const Matrix &b, const OrthonormalFrame &q,
                       const Matrix &w0, const LabeledBatch &batch,
                       const GlmLoss &glm) {
  if (q.orientation() != Orientation::row_orthonormal) {
    throw DimensionError("grad_B_frozen_A: Q must be row-orthonormal");
  }
  if (b.cols() != q.rank() || b.rows() != w0.rows() ||
      q.ambient_dim() != w0.cols()) {
    throw DimensionError("grad_B_frozen_A: B, Q, W0 do not conform");
  }
  const Matrix w = w0 + b * q.matrix();
  check_weights(w, batch, glm);
  const Matrix projected = batch.x * q.matrix().transpose();  // rows (Q x_i)^T
  return output_residuals(w, batch, glm).transpose() * projected;
}

Matrix grad_A_frozen_B(const Matrix &a, const OrthonormalFrame &u,
                       const Matrix &w0, const LabeledBatch &batch,
                       const GlmLoss &glm) {
  if (u.orientation() != Orientation::column_orthonormal) {
    throw DimensionError("grad_A_frozen_B: U must be column-orthonormal");
  }
  if (a.rows() != u.rank() || a.cols() != w0.cols() ||
      u.ambient_dim() != w0.rows()) {
    throw DimensionError("grad_A_frozen_B: A, U, W0 do not conform");
  }
  const Matrix w = w0 + u.matrix() * a;
  check_weights(w, batch, glm);
  const Matrix projected_fit = output_residuals(w, batch, glm) * u.matrix();
  return projected_fit.transpose() * batch.x;
}

Vector softmax_probs(const Matrix &w, const Vector &x, Index head_size) {
  if (w.cols() != x.size()) {
    throw DimensionError("softmax_probs: W and x do not conform");
  }
  Vector logits = w * x;
  const Index block = head_size > 0 ? head_size : logits.size();
  if (block == 0 || logits.size() % block != 0) {
    throw DimensionError("softmax_probs: head size must divide the output size");
  }
  for (Index start = 0; start < logits.size(); start += block) {
    softmax_inplace(logits.segment(start, block));
  }
  return logits;
}

// ---- training --------------------------------------------------------------

TrainTrace train(const LabeledBatch &batch, const Matrix &w0,
                 const AdapterState &adapter, const GlmLoss &glm,
                 const TrainOptions &options) {
  adapter.validate();
  if (!(options.learning_rate > 0.0) || options.steps < 0) {
    throw ValidationError("train: learning rate must be positive, steps >= 0");
  }
  if (adapter.b.rows() != w0.rows() || adapter.a.cols() != w0.cols()) {
    throw DimensionError("train: adapter does not conform to W0");
  }
  check_weights(w0, batch, glm);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double s = adapter.scale();

  TrainTrace trace;
  trace.adapter = adapter;
  AdapterState &st = trace.adapter;
  trace.losses.reserve(static_cast<std::size_t>(options.steps) + 1);

  auto record = [&](const Matrix &w) {
    const double value = loss(w, batch, glm) * inv_n;
    if (!std::isfinite(value) || value > options.divergence_limit) {
      throw DivergenceError("train: loss diverged at step " +
                            std::to_string(trace.losses.size()));
    }
    trace.losses.push_back(value);
  };

  Matrix w = w0 + st.effective_update();
  record(w);
  for (Index step = 0; step < options.steps; ++step) {
    const Matrix g = grad_W(w, batch, glm) * inv_n;
    const bool move_b = st.mode != FreezeMode::freeze_B;
    const bool move_a = st.mode != FreezeMode::freeze_A;
    // both gradients at the current iterate before either update
    Matrix grad_b, grad_a;
    if (move_b) grad_b = s * g * st.a.transpose();
    if (move_a) grad_a = s * st.b.transpose() * g;
    if (move_b) st.b -= options.learning_rate * grad_b;
    if (move_a) st.a -= options.learning_rate * grad_a;
    w = w0 + st.effective_update();
    record(w);
  }
  return trace;
}

} // namespace asymlora
