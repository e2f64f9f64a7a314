#include "asymlora/stiefel.h"

#include <string>

#include "asymlora/errors.h"
#include "asymlora/random.h"

namespace asymlora {

double orthonormality_residual(const Matrix &data, Orientation orientation) {
  if (orientation == Orientation::row_orthonormal) {
    return (data * data.transpose() - Matrix::Identity(data.rows(), data.rows()))
        .norm();
  }
  return (data.transpose() * data - Matrix::Identity(data.cols(), data.cols()))
      .norm();
}

OrthonormalFrame::OrthonormalFrame(Matrix data, Orientation orientation)
    : data_(std::move(data)), orientation_(orientation) {
  if (data_.size() == 0) {
    throw DimensionError("orthonormal frame must be non-empty");
  }
  const double residual = asymlora::orthonormality_residual(data_, orientation_);
  if (!(residual <= kTolerance)) {
    throw ValidationError("matrix is not orthonormal (residual " +
                          std::to_string(residual) + ")");
  }
}

Index OrthonormalFrame::rank() const {
  return orientation_ == Orientation::row_orthonormal ? data_.rows()
                                                      : data_.cols();
}

Index OrthonormalFrame::ambient_dim() const {
  return orientation_ == Orientation::row_orthonormal ? data_.cols()
                                                      : data_.rows();
}

OrthonormalFrame OrthonormalFrame::transposed() const {
  return OrthonormalFrame(data_.transpose(),
                          orientation_ == Orientation::row_orthonormal
                              ? Orientation::column_orthonormal
                              : Orientation::row_orthonormal);
}

double OrthonormalFrame::orthonormality_residual() const {
  return asymlora::orthonormality_residual(data_, orientation_);
}

OrthonormalFrame OrthonormalFrame::identity(Index dim, Orientation orientation) {
  return OrthonormalFrame(Matrix::Identity(dim, dim), orientation);
}

namespace {

// ambient x rank matrix with orthonormal columns.
Matrix haar_columns(Index ambient, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix gaussian = rng.gaussian(ambient, rank);
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(ambient, rank);
  const auto &r = qr.matrixQR();
  for (Index j = 0; j < rank; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) *= -1.0;
    }
  }
  return q;
}

} // namespace

OrthonormalFrame sample_stiefel(Index rows, Index cols, Orientation orientation,
                                std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("stiefel dimensions must be positive");
  }
  if (orientation == Orientation::column_orthonormal) {
    if (cols > rows) {
      throw DimensionError("column-orthonormal frame needs cols <= rows, got " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
    return OrthonormalFrame(haar_columns(rows, cols, seed), orientation);
  }
  if (rows > cols) {
    throw DimensionError("row-orthonormal frame needs rows <= cols, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return OrthonormalFrame(haar_columns(cols, rows, seed).transpose(),
                          orientation);
}

Matrix random_low_rank(Index d_out, Index d_in, Index rank, double scale,
                       std::uint64_t seed) {
  if (d_out < 1 || d_in < 1 || rank < 1 || rank > std::min(d_out, d_in)) {
    throw DimensionError("random_low_rank: need 1 <= rank <= min(d_out, d_in)");
  }
  if (!(scale > 0.0)) {
    throw ValidationError("random_low_rank: scale must be positive");
  }
  Rng rng(seed);
  const Matrix left = rng.gaussian(d_out, rank);
  const Matrix right = rng.gaussian(rank, d_in);
  Matrix delta = left * right;
  delta *= scale / delta.norm();
  return delta;
}

} // namespace asymlora
