#pragma once

#include <cstdint>
#include <random>

#include <latsep/types.hpp>

namespace latsep::testutil {

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

// keeps entries away from zero so abs/leaky_relu kinks and finite
// differences cannot straddle the origin
inline Mat random_mat_off_zero(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                               double min_abs = 1e-2) {
  Mat m = random_mat(rows, cols, seed);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (std::abs(m(i, j)) < min_abs) m(i, j) = m(i, j) < 0.0 ? -min_abs : min_abs;
  return m;
}

inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// max relative error between an analytic gradient and central finite
// differences of `eval` (which must re-run the full forward pass after each
// perturbation of the watched matrix)
template <typename Eval>
double max_fd_error(Mat& param, const Mat& analytic_grad, Eval eval, double h = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.rows(); ++i)
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double saved = param(i, j);
      param(i, j) = saved + h;
      const double up = eval();
      param(i, j) = saved - h;
      const double down = eval();
      param(i, j) = saved;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, rel_error(analytic_grad(i, j), fd));
    }
  return worst;
}

}  // namespace latsep::testutil
