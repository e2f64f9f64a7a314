#pragma once

#include <cstdint>

#include "asymlora/types.h"

namespace asymlora {

enum class Orientation { row_orthonormal, column_orthonormal };

/// A matrix with orthonormal rows (a frozen input projection Q, r x d_in)
/// or orthonormal columns (a frozen output basis U, d_out x r).
class OrthonormalFrame {
public:
  static constexpr double kTolerance = 1e-10;

  /// Validates the orientation invariant; throws ValidationError when the
  /// residual ||F F^T - I||_F (or ||F^T F - I||_F) exceeds kTolerance.
  OrthonormalFrame(Matrix data, Orientation orientation);

  const Matrix &matrix() const { return data_; }
  Orientation orientation() const { return orientation_; }

  /// Number of orthonormal vectors (r).
  Index rank() const;
  /// Dimension of the space the vectors live in (d).
  Index ambient_dim() const;

  /// Same frame viewed with the other orientation (Q <-> Q^T).
  OrthonormalFrame transposed() const;

  /// ||F F^T - I||_F for row frames, ||F^T F - I||_F for column frames.
  double orthonormality_residual() const;

  static OrthonormalFrame identity(Index dim, Orientation orientation);

private:
  Matrix data_;
  Orientation orientation_;
};

double orthonormality_residual(const Matrix &data, Orientation orientation);

/// Haar-uniform draw from the Stiefel manifold.
///
/// A rows x cols (column frames) or cols x rows (row frames) block of i.i.d.
/// standard normals is QR-factorized; each column of the orthogonal factor is
/// multiplied by the sign of the matching diagonal entry of R, which makes the
/// factorization unique and the result exactly Haar distributed.
/// Throws DimensionError when the orthonormal side exceeds the ambient side.
OrthonormalFrame sample_stiefel(Index rows, Index cols, Orientation orientation,
                                std::uint64_t seed);

/// Rank-`rank` matrix G1 * G2 of Gaussian factors rescaled to Frobenius norm
/// `scale`. Used to synthesize target shifts Delta = W_targ - W0.
Matrix random_low_rank(Index d_out, Index d_in, Index rank, double scale,
                       std::uint64_t seed);

} // namespace asymlora
