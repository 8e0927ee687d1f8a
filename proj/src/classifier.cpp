#include <latsep/classifier.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace latsep {

namespace {

using LabelCol = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

Vec signed_labels(const Eigen::Ref<const LabelCol>& labels) {
  Vec y(labels.rows());
  for (Eigen::Index i = 0; i < labels.rows(); ++i) y(i) = labels(i) ? 1.0 : -1.0;
  return y;
}

}  // namespace

Vec LinearAttributeClassifier::scores(const Mat& codes) const {
  return (codes * weight).array() + bias;
}

Vec LinearAttributeClassifier::probs(const Mat& codes) const {
  return scores(codes).unaryExpr([](double s) { return sigmoid(s); });
}

double LinearAttributeClassifier::weight_norm() const { return weight.norm(); }

Vec LinearAttributeClassifier::unit_normal() const {
  const double n = weight.norm();
  if (n == 0.0) throw std::runtime_error("classifier weight is zero, hyperplane normal undefined");
  return weight / n;
}

double LinearAttributeClassifier::distance_offset() const { return bias / weight.norm(); }

Vec LinearAttributeClassifier::signed_distances(const Mat& codes) const {
  const double n = weight.norm();
  if (n == 0.0) throw std::runtime_error("classifier weight is zero, signed distance undefined");
  return ((codes * weight).array() + bias) / n;
}

int ClassifierBank::dim() const {
  return classifiers.empty() ? 0 : static_cast<int>(classifiers.front().weight.size());
}

bool ClassifierBank::all_frozen() const {
  for (const auto& c : classifiers)
    if (!c.frozen) return false;
  return !classifiers.empty();
}

Mat ClassifierBank::weight_matrix() const {
  Mat w(dim(), size());
  for (int k = 0; k < size(); ++k) w.col(k) = classifiers[static_cast<std::size_t>(k)].weight;
  return w;
}

Mat ClassifierBank::bias_row() const {
  Mat b(1, size());
  for (int k = 0; k < size(); ++k) b(0, k) = classifiers[static_cast<std::size_t>(k)].bias;
  return b;
}

Mat ClassifierBank::unit_normal_matrix() const {
  Mat d(dim(), size());
  for (int k = 0; k < size(); ++k) d.col(k) = classifiers[static_cast<std::size_t>(k)].unit_normal();
  return d;
}

Mat ClassifierBank::offset_row() const {
  Mat o(1, size());
  for (int k = 0; k < size(); ++k) o(0, k) = classifiers[static_cast<std::size_t>(k)].distance_offset();
  return o;
}

Mat ClassifierBank::score_matrix(const Mat& codes) const {
  return (codes * weight_matrix()).rowwise() + bias_row().row(0);
}

Mat ClassifierBank::prob_matrix(const Mat& codes) const {
  return score_matrix(codes).unaryExpr([](double s) { return sigmoid(s); });
}

LabelMat ClassifierBank::predict_matrix(const Mat& codes) const {
  const Mat s = score_matrix(codes);
  LabelMat out(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index k = 0; k < s.cols(); ++k) out(i, k) = s(i, k) >= 0.0 ? 1 : 0;
  return out;
}

ClassifierBank pretrain_bank(const LabeledLatentDataset& dataset, int epochs, double lr,
                             std::uint64_t seed) {
  if (dataset.num_samples() == 0) throw std::runtime_error("pretrain: empty dataset");
  dataset.validate();

  const int n = dataset.num_samples();
  const int k_attrs = dataset.num_attributes();
  const Mat& x = dataset.codes;
  constexpr int kBatch = 64;

  ClassifierBank bank;
  bank.attribute_names = dataset.attribute_names;
  bank.classifiers.resize(static_cast<std::size_t>(k_attrs));
  for (int k = 0; k < k_attrs; ++k) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = static_cast<double>(dataset.labels(i, k));

    // minibatch SGD from zero weights, one seeded shuffle per epoch
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    Vec w = Vec::Zero(dataset.dim());
    double b = 0.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }
      for (int start = 0; start < n; start += kBatch) {
        const int count = std::min(kBatch, n - start);
        Vec grad_w = Vec::Zero(dataset.dim());
        double grad_b = 0.0;
        for (int i = start; i < start + count; ++i) {
          const int row = order[static_cast<std::size_t>(i)];
          const double err = sigmoid(x.row(row).dot(w) + b) - y(row);
          grad_w += err * x.row(row).transpose();
          grad_b += err;
        }
        w -= (lr / count) * grad_w;
        b -= (lr / count) * grad_b;
      }
    }
    auto& c = bank.classifiers[static_cast<std::size_t>(k)];
    c.weight = w;
    c.bias = b;
    c.frozen = true;
  }
  return bank;
}

Vec SvmHyperplane::unit_normal() const {
  const double n = weight.norm();
  if (n == 0.0) throw std::runtime_error("svm weight is zero, hyperplane normal undefined");
  return weight / n;
}

double SvmHyperplane::distance_offset() const { return bias / weight.norm(); }

Vec SvmHyperplane::signed_distances(const Mat& codes) const {
  const double n = weight.norm();
  if (n == 0.0) throw std::runtime_error("svm weight is zero, signed distance undefined");
  return ((codes * weight).array() + bias) / n;
}

SvmHyperplane train_svm(const Mat& codes, const Eigen::Ref<const LabelCol>& labels, int attribute,
                        const SvmParams& params, std::uint64_t seed) {
  const int n = static_cast<int>(codes.rows());
  if (n == 0 || labels.rows() != n)
    throw std::runtime_error("svm: dataset empty or label length mismatch");
  if (params.lambda <= 0.0) throw std::invalid_argument("svm: lambda must be positive");

  const Vec y = signed_labels(labels);
  if (y.maxCoeff() < 1.0 || y.minCoeff() > -1.0)
    throw std::runtime_error("svm: single-class data for attribute " + std::to_string(attribute));

  std::mt19937_64 rng(seed);
  const double radius = 1.0 / std::sqrt(params.lambda);

  Vec v = Vec::Zero(codes.cols());
  double b = 0.0;
  Vec v_sum = Vec::Zero(codes.cols());
  double b_sum = 0.0;
  long t = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    for (int i : order) {
      ++t;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));
      const double margin = y(i) * (codes.row(i).dot(v) + b);
      v *= 1.0 - eta * params.lambda;
      if (margin < 1.0) {
        v += eta * y(i) * codes.row(i).transpose();
        b += eta * y(i);
      }
      const double norm = v.norm();
      if (norm > radius) v *= radius / norm;
      v_sum += v;
      b_sum += b;
    }
  }

  SvmHyperplane h;
  h.weight = v_sum / static_cast<double>(t);
  h.bias = b_sum / static_cast<double>(t);
  h.attribute = attribute;
  return h;
}

double svm_accuracy(const SvmHyperplane& h, const Mat& codes,
                    const Eigen::Ref<const LabelCol>& labels) {
  if (codes.rows() == 0) throw std::runtime_error("svm accuracy: empty split");
  const Vec s = (codes * h.weight).array() + h.bias;
  int correct = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const bool positive = s(i) >= 0.0;
    if (positive == (labels(i) != 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(s.size());
}

double svm_objective(const Vec& weight, double bias, double lambda, const Mat& codes,
                     const Eigen::Ref<const LabelCol>& labels) {
  const Vec y = signed_labels(labels);
  const Vec margins = y.cwiseProduct(((codes * weight).array() + bias).matrix());
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) hinge += std::max(0.0, 1.0 - margins(i));
  hinge /= static_cast<double>(margins.size());
  return 0.5 * lambda * weight.squaredNorm() + hinge;
}

}  // namespace latsep
