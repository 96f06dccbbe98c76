#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mvcl {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// Floor applied to vector norms inside cosine similarity.
inline constexpr double kNormFloor = 1e-12;

}  // namespace mvcl
