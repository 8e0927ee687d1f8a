#pragma once

#include <vector>

#include <latsep/types.hpp>

namespace latsep {

// L1-regularized least squares fitted by cyclic coordinate descent with
// soft-thresholding. Features are centered and unit-scaled internally;
// coefficients are reported in those standardized units.
struct LassoModel {
  Vec coefficients;  // standardized units; constant features pinned to zero
  Vec feature_mean;
  Vec feature_scale;
  double target_mean = 0.0;
  int sweeps = 0;
  bool converged = false;
  // objective value after each full sweep, for monotonicity checks
  std::vector<double> sweep_objectives;

  Vec predict(const Mat& x) const;
};

// Minimizes (1/2N) ||y - b0 - Xs beta||^2 + alpha ||beta||_1 over the
// standardized design Xs. Converged when no coefficient moves more than 1e-6
// in a sweep. Throws std::runtime_error on non-finite inputs or N < 2.
LassoModel lasso_fit(const Mat& x, const Vec& y, double alpha, int max_sweeps = 1000);

// The objective above for a given coefficient vector on an already
// standardized design and centered target.
double lasso_objective(const Mat& x_std, const Vec& y_centered, const Vec& beta, double alpha);

inline double soft_threshold(double z, double threshold) {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

}  // namespace latsep
