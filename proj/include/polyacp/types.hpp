#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace polyacp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Factor matrices are accessed one entity row at a time.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using EntityIndex = std::uint32_t;

}  // namespace polyacp
