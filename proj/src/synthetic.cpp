#include <latsep/synthetic.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace latsep {

void WorldSpec::validate() const {
  if (num_attributes < 1) throw std::invalid_argument("world: need at least one attribute");
  if (dim < num_attributes)
    throw std::invalid_argument("world: dimension must be >= number of attributes");
  if (nonlinearity <= -1.0) throw std::invalid_argument("world: nonlinearity must be > -1");
  if (margin <= 0.0) throw std::invalid_argument("world: margin must be positive");
  if (correlation < 0.0 || correlation >= 1.0)
    throw std::invalid_argument("world: correlation must lie in [0, 1)");
}

Mat mixing_matrix(const WorldSpec& spec) {
  spec.validate();
  if (spec.identity_mixing) return Mat::Identity(spec.dim, spec.dim);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(spec.dim, spec.dim);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // fix the column signs so Q is a unique function of the seed
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

double warp(double x, double nonlinearity) { return x + nonlinearity * std::tanh(x); }

double unwarp(double y, double nonlinearity) {
  const double pad = std::abs(nonlinearity) + 1.0;
  double lo = y - pad;
  double hi = y + pad;
  if (warp(lo, nonlinearity) > y || warp(hi, nonlinearity) < y)
    throw std::runtime_error("unwarp: bracket does not contain the preimage");
  for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (warp(mid, nonlinearity) <= y)
      lo = mid;
    else
      hi = mid;
  }
  if (hi - lo > 1e-10) throw std::runtime_error("unwarp: bisection did not converge");
  return 0.5 * (lo + hi);
}

LabeledLatentDataset generate_world(const WorldSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("world: need at least one sample");

  const int k_attrs = spec.num_attributes;
  const int dim = spec.dim;
  const Mat q = mixing_matrix(spec);
  const double share_prob = std::sqrt(spec.correlation);

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LabeledLatentDataset ds;
  ds.codes.resize(n, dim);
  ds.labels.resize(n, k_attrs);
  ds.provenance = "synthetic";
  ds.seed = seed;
  ds.attribute_names.reserve(static_cast<std::size_t>(k_attrs));
  for (int k = 0; k < k_attrs; ++k) ds.attribute_names.push_back("attr" + std::to_string(k));

  Vec z(dim);
  for (int i = 0; i < n; ++i) {
    const double shared = coin(rng) ? 1.0 : -1.0;
    for (int k = 0; k < k_attrs; ++k) {
      double sign;
      if (unit(rng) < share_prob)
        sign = shared;
      else
        sign = coin(rng) ? 1.0 : -1.0;
      z(k) = spec.margin * sign;
      ds.labels(i, k) = sign > 0.0 ? 1 : 0;
    }
    for (int d = k_attrs; d < dim; ++d) z(d) = gauss(rng);
    const Vec mixed = q * z;
    for (int d = 0; d < dim; ++d) ds.codes(i, d) = warp(mixed(d), spec.nonlinearity);
  }
  return ds;
}

Vec true_factors(const WorldSpec& spec, const Eigen::Ref<const RowVec>& code) {
  spec.validate();
  if (code.size() != spec.dim)
    throw std::invalid_argument("world oracle: code width does not match spec dimension");
  Vec unwarped(spec.dim);
  for (int d = 0; d < spec.dim; ++d) unwarped(d) = unwarp(code(d), spec.nonlinearity);
  const Mat q = mixing_matrix(spec);
  const Vec z = q.transpose() * unwarped;
  return z.head(spec.num_attributes);
}

}  // namespace latsep
