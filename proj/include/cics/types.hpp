#pragma once

#include <Eigen/Dense>

namespace cics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace cics
