#pragma once

#include <Eigen/Dense>

namespace soloseg {

// Dense 2-d field of doubles, row-major so that flat memory order is
// row 0 left to right, then row 1, and so on.
using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace soloseg
