#pragma once

#include <algorithm>
#include <functional>

#include "asymlora/types.h"

namespace asymlora::harness {

/// Central finite-difference gradient of a scalar function of a matrix.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix &)> &fn,
                                         const Matrix &at, double step = 1e-5) {
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (Index j = 0; j < at.cols(); ++j) {
    for (Index i = 0; i < at.rows(); ++i) {
      const double keep = probe(i, j);
      probe(i, j) = keep + step;
      const double up = fn(probe);
      probe(i, j) = keep - step;
      const double down = fn(probe);
      probe(i, j) = keep;
      grad(i, j) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

/// ||actual - reference||_inf / max(||reference||_inf, floor)
inline double max_relative_error(const Matrix &actual, const Matrix &reference,
                                 double floor = 1e-12) {
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), floor);
  return (actual - reference).cwiseAbs().maxCoeff() / scale;
}

} // namespace asymlora::harness
