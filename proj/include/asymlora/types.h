#pragma once

#include <Eigen/Dense>

namespace asymlora {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace asymlora
