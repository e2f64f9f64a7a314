#pragma once

#include "asymlora/types.h"

namespace asymlora {

/// Column space for B-like factors (left singular vectors), row space for
/// A-like factors (right singular vectors).
enum class Side { column_space, row_space };

struct SubspaceBasis {
  Matrix basis;  // orthonormal columns
  Side side = Side::column_space;
  Index effective_rank = 0;
};

/// Singular values below kRankTolerance times the largest are dropped.
inline constexpr double kRankTolerance = 1e-10;

/// SVD basis of the chosen side of `m`. Throws ValidationError for a zero matrix.
SubspaceBasis orthonormal_basis(const Matrix &m, Side side);

/// CCA goodness of fit ||U_Y^T U_X||_F^2 / min(r_X, r_Y), with the
/// effective ranks in the denominator. Invariant under X -> X C (column
/// side) or X -> C X (row side) for invertible C.
double cca_similarity(const Matrix &x, const Matrix &y, Side side);

} // namespace asymlora
