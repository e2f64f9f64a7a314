#include "asymlora/lsq_adapter.h"

#include <cmath>
#include <limits>
#include <string>

#include "asymlora/errors.h"
#include "asymlora/random.h"

namespace asymlora {

void LinearFineTuneTask::validate() const {
  const Index dout = w0.rows();
  const Index din = w0.cols();
  if (dout < 1 || din < 1) {
    throw DimensionError("task: W0 must be non-empty");
  }
  if (b0.size() != dout || delta.rows() != dout || delta.cols() != din ||
      sigma.rows() != din || sigma.cols() != din) {
    throw DimensionError("task: b0, delta, sigma do not conform to W0");
  }
  if ((sigma - sigma.transpose()).norm() >= 1e-10) {
    throw ValidationError("task: sigma is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw ValidationError("task: sigma is not positive semidefinite");
  }
  if (!(noise_var >= 0.0)) {
    throw ValidationError("task: noise variance must be non-negative");
  }
}

Matrix random_covariance(Index dim, double ridge, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix g = rng.gaussian(dim, dim);
  Matrix sigma = g * g.transpose() / static_cast<double>(dim);
  sigma.diagonal().array() += ridge;
  // exact symmetry, GEMM rounding can differ across the diagonal
  return 0.5 * (sigma + sigma.transpose());
}

LinearFineTuneTask random_task(Index d_in, Index d_out, Index delta_rank,
                               double delta_scale, double noise_var,
                               std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  LinearFineTuneTask task;
  task.w0 = rng.gaussian(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)));
  task.b0 = rng.gaussian(d_out, 1);
  task.delta = random_low_rank(d_out, d_in, delta_rank, delta_scale,
                               derive_seed(seed, 1));
  task.sigma = random_covariance(d_in, 0.1, derive_seed(seed, 2));
  task.noise_var = noise_var;
  return task;
}

namespace {

void require_row_frame(const OrthonormalFrame &q, Index d_in, const char *what) {
  if (q.orientation() != Orientation::row_orthonormal) {
    throw DimensionError(std::string(what) + ": Q must be row-orthonormal");
  }
  if (q.ambient_dim() != d_in) {
    throw DimensionError(std::string(what) + ": Q has " +
                         std::to_string(q.ambient_dim()) + " columns, expected " +
                         std::to_string(d_in));
  }
}

void require_column_frame(const OrthonormalFrame &u, Index d_out,
                          const char *what) {
  if (u.orientation() != Orientation::column_orthonormal) {
    throw DimensionError(std::string(what) + ": U must be column-orthonormal");
  }
  if (u.ambient_dim() != d_out) {
    throw DimensionError(std::string(what) + ": U has " +
                         std::to_string(u.ambient_dim()) + " rows, expected " +
                         std::to_string(d_out));
  }
}

// Cholesky of M = Q sigma Q^T after the conditioning check.
Eigen::LLT<Matrix> factor_projected(const Matrix &sigma, const Matrix &q,
                                    const SolveOptions &options) {
  Matrix m = q * sigma * q.transpose();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond =
      lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= options.max_condition)) {
    if (!options.ridge_fallback) {
      throw SingularityError("Q sigma Q^T is singular or ill-conditioned "
                             "(condition number " + std::to_string(cond) + ")",
                             cond);
    }
    const double ridge = 1e-10 * m.trace() / static_cast<double>(m.rows());
    m.diagonal().array() += ridge;
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("Cholesky of Q sigma Q^T failed", cond);
  }
  return llt;
}

} // namespace

Matrix solve_freeze_A(const LinearFineTuneTask &task, const OrthonormalFrame &q,
                      const SolveOptions &options) {
  task.validate();
  require_row_frame(q, task.d_in(), "solve_freeze_A");
  const Matrix &qm = q.matrix();
  const auto llt = factor_projected(task.sigma, qm, options);
  // B*^T = M^-1 Q sigma delta^T, M symmetric
  const Matrix rhs = qm * task.sigma * task.delta.transpose();
  return llt.solve(rhs).transpose();
}

Matrix solve_freeze_B(const LinearFineTuneTask &task, const OrthonormalFrame &u) {
  task.validate();
  require_column_frame(u, task.d_out(), "solve_freeze_B");
  return u.matrix().transpose() * task.delta;
}

double expected_loss_freeze_A(const LinearFineTuneTask &task,
                              const OrthonormalFrame &q,
                              const SolveOptions &options) {
  task.validate();
  require_row_frame(q, task.d_in(), "expected_loss_freeze_A");
  const Matrix &qm = q.matrix();
  const auto llt = factor_projected(task.sigma, qm, options);
  const Matrix p = qm * task.sigma * task.delta.transpose();  // r x d_out
  const double explained = (p.transpose() * llt.solve(p)).trace();
  const double total = (task.delta * task.sigma * task.delta.transpose()).trace();
  return static_cast<double>(task.d_out()) * task.noise_var + total - explained;
}

double expected_loss_freeze_B(const LinearFineTuneTask &task,
                              const OrthonormalFrame &u) {
  task.validate();
  require_column_frame(u, task.d_out(), "expected_loss_freeze_B");
  const Matrix out_cov = task.delta * task.sigma * task.delta.transpose();
  const Matrix &um = u.matrix();
  const double explained = (um.transpose() * out_cov * um).trace();
  return static_cast<double>(task.d_out()) * task.noise_var + out_cov.trace() -
         explained;
}

double expected_loss(const LinearFineTuneTask &task, const Matrix &b,
                     const Matrix &a) {
  task.validate();
  if (b.rows() != task.d_out() || a.cols() != task.d_in() || b.cols() != a.rows()) {
    throw DimensionError("expected_loss: B, A do not conform to the task");
  }
  const Matrix residual = task.delta - b * a;
  return static_cast<double>(task.d_out()) * task.noise_var +
         (residual * task.sigma * residual.transpose()).trace();
}

double optimal_loss_train_both(const LinearFineTuneTask &task, Index rank) {
  task.validate();
  if (rank < 0) {
    throw DimensionError("optimal_loss_train_both: negative rank");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(task.sigma);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix sqrt_sigma =
      eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::JacobiSVD<Matrix> svd(task.delta * sqrt_sigma);
  const Vector &s = svd.singularValues();
  double tail = 0.0;
  for (Index i = rank; i < s.size(); ++i) {
    tail += s(i) * s(i);
  }
  return static_cast<double>(task.d_out()) * task.noise_var + tail;
}

double empirical_loss(const LinearFineTuneTask &task, const Matrix &b,
                      const Matrix &a, Index n_samples, std::uint64_t seed) {
  task.validate();
  if (n_samples < 1) {
    throw ValidationError("empirical_loss: n_samples must be >= 1");
  }
  if (b.rows() != task.d_out() || a.cols() != task.d_in() || b.cols() != a.rows()) {
    throw DimensionError("empirical_loss: B, A do not conform to the task");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(task.sigma);
  const Matrix factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Matrix w_targ = task.w_targ();
  const Matrix w_hat = task.w0 + b * a;
  const double noise_sd = std::sqrt(task.noise_var);

  double total = 0.0;
  const Index chunks = (n_samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  for (Index chunk = 0; chunk < chunks; ++chunk) {
    const Index m = std::min(kMonteCarloChunk, n_samples - chunk * kMonteCarloChunk);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
    const Matrix x = factor * rng.gaussian(task.d_in(), m);
    const Matrix noise = rng.gaussian(task.d_out(), m, noise_sd);
    Matrix y = w_targ * x + noise;
    y.colwise() += task.b0;
    Matrix pred = w_hat * x;
    pred.colwise() += task.b0;
    total += (y - pred).squaredNorm();
  }
  return total / static_cast<double>(n_samples);
}

AsymmetryTrial asymmetry_trial(const LinearFineTuneTask &task, Index rank,
                               std::uint64_t seed, const SolveOptions &options) {
  task.validate();
  const auto u = sample_stiefel(task.d_out(), rank, Orientation::column_orthonormal,
                                derive_seed(seed, 0));
  const auto q = sample_stiefel(rank, task.d_in(), Orientation::row_orthonormal,
                                derive_seed(seed, 1));
  AsymmetryTrial trial;
  trial.loss_freeze_A = expected_loss_freeze_A(task, q, options);
  trial.loss_freeze_B = expected_loss_freeze_B(task, u);
  trial.gap = trial.loss_freeze_B - trial.loss_freeze_A;
  return trial;
}

double trace_inequality_residual(const Matrix &sigma, const Matrix &delta,
                                 const OrthonormalFrame &q,
                                 const SolveOptions &options) {
  if (sigma.rows() != sigma.cols() || delta.cols() != sigma.rows()) {
    throw DimensionError("trace_inequality_residual: sigma/delta shapes");
  }
  require_row_frame(q, sigma.rows(), "trace_inequality_residual");
  const Matrix &qm = q.matrix();
  const auto llt = factor_projected(sigma, qm, options);
  // sigma Q^T M^-1 Q sigma
  const Matrix qs = qm * sigma;
  const Matrix projected = qs.transpose() * llt.solve(qs);
  const Matrix gram = delta.transpose() * delta;
  const Matrix lhs_inner = projected * gram;
  const double lhs = lhs_inner.trace();
  const double rhs = (qm.transpose() * (qm * lhs_inner)).trace();
  return lhs - rhs;
}

Matrix lowrank_sigma_equivalent_B(const Matrix &b_star, const Matrix &a_star,
                                  const Matrix &f, const OrthonormalFrame &q) {
  if (b_star.cols() != a_star.rows() || a_star.cols() != f.rows()) {
    throw DimensionError("lowrank_sigma_equivalent_B: B*, A*, F do not conform");
  }
  require_row_frame(q, f.rows(), "lowrank_sigma_equivalent_B");
  const Matrix qf = q.matrix() * f;
  if (qf.rows() != qf.cols()) {
    throw DimensionError("lowrank_sigma_equivalent_B: Q F must be square");
  }
  Eigen::JacobiSVD<Matrix> svd(qf);
  const Vector &s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0
                          ? s(0) / s(s.size() - 1)
                          : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    throw SingularityError("Q F is singular (condition number " +
                               std::to_string(cond) + ")",
                           cond);
  }
  // B_eq = (B* A* F) (QF)^-1  <=>  B_eq^T = (QF)^-T (B* A* F)^T
  const Matrix target = b_star * (a_star * f);
  return qf.transpose().partialPivLu().solve(target.transpose()).transpose();
}

double asymptotic_gap(const OrthonormalFrame &u_x, const Matrix &delta, Index r,
                      Index d, double variance) {
  if (u_x.orientation() != Orientation::column_orthonormal) {
    throw DimensionError("asymptotic_gap: U_X must be column-orthonormal");
  }
  if (r < 0 || d < 1 || r > d) {
    throw DimensionError("asymptotic_gap: need 0 <= r <= d");
  }
  if (delta.cols() != u_x.ambient_dim()) {
    throw DimensionError("asymptotic_gap: delta does not conform to U_X");
  }
  const Matrix &ux = u_x.matrix();
  // Tr[U_X U_X^T D^T D] = ||D U_X||_F^2
  const double trace = (delta * ux).squaredNorm();
  return variance * (1.0 - static_cast<double>(r) / static_cast<double>(d)) * trace;
}

} // namespace asymlora
