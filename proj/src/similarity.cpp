#include "asymlora/similarity.h"

#include <algorithm>

#include "asymlora/errors.h"

namespace asymlora {

SubspaceBasis orthonormal_basis(const Matrix &m, Side side) {
  if (m.size() == 0) {
    throw DimensionError("orthonormal_basis: empty matrix");
  }
  const bool columns = side == Side::column_space;
  Eigen::BDCSVD<Matrix> svd(m, columns ? Eigen::ComputeThinU : Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  if (!(s(0) > 0.0)) {
    throw ValidationError("orthonormal_basis: zero matrix has no basis");
  }
  Index keep = 0;
  while (keep < s.size() && s(keep) > kRankTolerance * s(0)) {
    ++keep;
  }
  SubspaceBasis out;
  out.side = side;
  out.effective_rank = keep;
  out.basis = columns ? Matrix(svd.matrixU().leftCols(keep))
                      : Matrix(svd.matrixV().leftCols(keep));
  return out;
}

double cca_similarity(const Matrix &x, const Matrix &y, Side side) {
  const Index ambient_x = side == Side::column_space ? x.rows() : x.cols();
  const Index ambient_y = side == Side::column_space ? y.rows() : y.cols();
  if (ambient_x != ambient_y) {
    throw DimensionError("cca_similarity: ambient dimensions differ");
  }
  const SubspaceBasis bx = orthonormal_basis(x, side);
  const SubspaceBasis by = orthonormal_basis(y, side);
  const double overlap = (by.basis.transpose() * bx.basis).squaredNorm();
  return overlap /
         static_cast<double>(std::min(bx.effective_rank, by.effective_rank));
}

} // namespace asymlora
