#include <latsep/lasso.hpp>

#include <cmath>
#include <stdexcept>

namespace latsep {

Vec LassoModel::predict(const Mat& x) const {
  Vec out = Vec::Constant(x.rows(), target_mean);
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    if (coefficients(j) == 0.0) continue;
    out += coefficients(j) * ((x.col(j).array() - feature_mean(j)) / feature_scale(j)).matrix();
  }
  return out;
}

double lasso_objective(const Mat& x_std, const Vec& y_centered, const Vec& beta, double alpha) {
  const double n = static_cast<double>(x_std.rows());
  const Vec residual = y_centered - x_std * beta;
  return 0.5 / n * residual.squaredNorm() + alpha * beta.lpNorm<1>();
}

LassoModel lasso_fit(const Mat& x, const Vec& y, double alpha, int max_sweeps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw std::runtime_error("lasso: need at least two samples");
  if (y.size() != n) throw std::runtime_error("lasso: target length mismatch");
  if (!x.allFinite() || !y.allFinite()) throw std::runtime_error("lasso: non-finite input");
  if (alpha < 0.0) throw std::invalid_argument("lasso: alpha must be >= 0");

  LassoModel model;
  model.feature_mean = x.colwise().mean();
  model.feature_scale = Vec::Ones(d);
  model.target_mean = y.mean();

  Mat xs(n, d);
  std::vector<bool> active(static_cast<std::size_t>(d), true);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vec centered = x.col(j).array() - model.feature_mean(j);
    const double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (scale == 0.0) {
      active[static_cast<std::size_t>(j)] = false;  // constant feature
      xs.col(j).setZero();
    } else {
      model.feature_scale(j) = scale;
      xs.col(j) = centered / scale;
    }
  }
  const Vec yc = y.array() - model.target_mean;

  Vec beta = Vec::Zero(d);
  Vec residual = yc;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      // unit-variance columns make the curvature term exactly one
      const double rho = inv_n * xs.col(j).dot(residual) + beta(j);
      const double updated = soft_threshold(rho, alpha);
      const double change = updated - beta(j);
      if (change != 0.0) {
        residual -= change * xs.col(j);
        beta(j) = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }
    model.sweep_objectives.push_back(0.5 * inv_n * residual.squaredNorm() +
                                     alpha * beta.lpNorm<1>());
    model.sweeps = sweep + 1;
    if (max_change < 1e-6) {
      model.converged = true;
      break;
    }
  }
  model.coefficients = beta;
  return model;
}

}  // namespace latsep
