#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace latsep {

// Dense double-precision types used throughout. Matrices are row-major so a
// serialized parameter or code buffer is exactly the in-memory byte order.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Binary attribute labels, one row per sample, entries in {0, 1}.
using LabelMat = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Overflow-free logistic function, branching on the sign of the input.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace latsep
