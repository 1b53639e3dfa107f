#pragma once

#include <Eigen/Core>

namespace pinn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace pinn
