#include <latsep/metrics.hpp>

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <latsep/editor.hpp>

namespace latsep {

namespace {

using LabelCol = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

bool has_both_classes(const Eigen::Ref<const LabelCol>& labels) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < labels.rows(); ++i) (labels(i) ? pos : neg) = true;
  return pos && neg;
}

double entropy_normalized(const Vec& weights, double base_count) {
  // weights are nonnegative with positive sum; entropy normalized by
  // log(base_count) so the result lies in [0, 1]
  if (base_count <= 1.0) return 0.0;
  const double total = weights.sum();
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    const double p = weights(i) / total;
    h -= p * std::log(p);
  }
  return h / std::log(base_count);
}

}  // namespace

SeparabilityReport separability(const Mat& codes, const LabelMat& labels,
                                const std::vector<std::string>& attribute_names,
                                std::uint64_t seed, const SvmParams& svm) {
  const int n = static_cast<int>(codes.rows());
  const int k_attrs = static_cast<int>(labels.cols());
  if (n == 0 || k_attrs == 0) throw std::runtime_error("separability: empty dataset");

  const TrainValSplit split = split_80_20(n, seed);
  const Mat train_codes = gather_rows(codes, split.train);
  const Mat val_codes = gather_rows(codes, split.validation);
  const LabelMat train_labels = gather_rows(labels, split.train);
  const LabelMat val_labels = gather_rows(labels, split.validation);

  SeparabilityReport report;
  report.attribute_names = attribute_names;
  report.accuracy.assign(static_cast<std::size_t>(k_attrs),
                         std::numeric_limits<double>::quiet_NaN());
  report.skipped.assign(static_cast<std::size_t>(k_attrs), false);
  report.hyperplanes.resize(static_cast<std::size_t>(k_attrs));

  double sum = 0.0;
  int used = 0;
  double min_acc = 1.0, max_acc = 0.0;
  for (int k = 0; k < k_attrs; ++k) {
    const LabelCol train_col = train_labels.col(k);
    const LabelCol val_col = val_labels.col(k);
    if (!has_both_classes(train_col) || !has_both_classes(val_col)) {
      report.skipped[static_cast<std::size_t>(k)] = true;
      std::cerr << "warning: attribute " << k << " is single-class, skipped\n";
      continue;
    }
    SvmHyperplane h = train_svm(train_codes, train_col, k, svm, seed + static_cast<std::uint64_t>(k));
    const double acc = svm_accuracy(h, val_codes, val_col);
    report.accuracy[static_cast<std::size_t>(k)] = acc;
    report.hyperplanes[static_cast<std::size_t>(k)] = std::move(h);
    sum += acc;
    min_acc = std::min(min_acc, acc);
    max_acc = std::max(max_acc, acc);
    ++used;
  }
  if (used == 0) throw std::runtime_error("separability: every attribute is degenerate");
  report.min_accuracy = min_acc;
  report.max_accuracy = max_acc;
  report.mean_accuracy = sum / used;
  return report;
}

DciScores dci_scores(const Mat& importance) {
  if ((importance.array() < 0.0).any())
    throw std::invalid_argument("dci: importance entries must be nonnegative");
  const Eigen::Index k_attrs = importance.rows();
  const Eigen::Index dims = importance.cols();
  const double total = importance.sum();
  DciScores scores;
  if (total == 0.0) return scores;

  for (Eigen::Index d = 0; d < dims; ++d) {
    const Vec column = importance.col(d);
    const double column_sum = column.sum();
    if (column_sum == 0.0) continue;
    const double weight = column_sum / total;
    scores.disentanglement +=
        weight * (1.0 - entropy_normalized(column, static_cast<double>(k_attrs)));
  }
  for (Eigen::Index k = 0; k < k_attrs; ++k) {
    const Vec row = importance.row(k).transpose();
    if (row.sum() == 0.0) continue;  // contributes zero
    scores.completeness += (1.0 - entropy_normalized(row, static_cast<double>(dims))) /
                           static_cast<double>(k_attrs);
  }
  return scores;
}

DciResult dci(const Mat& codes, const LabelMat& labels, int n_samples, double lasso_alpha,
              std::uint64_t seed, int lasso_max_sweeps) {
  const int n = static_cast<int>(codes.rows());
  const int k_attrs = static_cast<int>(labels.cols());
  const int dims = static_cast<int>(codes.cols());
  if (n_samples < 2) throw std::runtime_error("dci: need at least two samples");
  if (n_samples > n)
    throw std::runtime_error("dci: requested " + std::to_string(n_samples) + " samples but only " +
                             std::to_string(n) + " available");

  std::vector<int> idx = shuffled_indices(n, seed);
  idx.resize(static_cast<std::size_t>(n_samples));
  const int train_count = (n_samples * 8) / 10;
  const std::vector<int> train_idx(idx.begin(), idx.begin() + train_count);
  const std::vector<int> val_idx(idx.begin() + train_count, idx.end());

  const Mat train_codes = gather_rows(codes, train_idx);
  const Mat val_codes = gather_rows(codes, val_idx);

  DciResult result;
  result.importance = Mat::Zero(k_attrs, dims);
  double error_sum = 0.0;
  for (int k = 0; k < k_attrs; ++k) {
    Vec y(train_count);
    for (int i = 0; i < train_count; ++i) y(i) = static_cast<double>(labels(train_idx[static_cast<std::size_t>(i)], k));
    const LassoModel fitted = lasso_fit(train_codes, y, lasso_alpha, lasso_max_sweeps);
    result.importance.row(k) = fitted.coefficients.cwiseAbs().transpose();

    const Vec predicted = fitted.predict(val_codes);
    int wrong = 0;
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
      const bool decision = predicted(static_cast<Eigen::Index>(i)) >= 0.5;
      if (decision != (labels(val_idx[i], k) != 0)) ++wrong;
    }
    error_sum += static_cast<double>(wrong) / static_cast<double>(val_idx.size());
  }

  const DciScores scores = dci_scores(result.importance);
  result.report.disentanglement = scores.disentanglement;
  result.report.completeness = scores.completeness;
  result.report.informativeness = error_sum / static_cast<double>(k_attrs);
  if (result.importance.sum() == 0.0) {
    result.report.degenerate = true;
    std::cerr << "warning: importance matrix is identically zero, degenerate dci report\n";
  }
  return result;
}

double flip_rate(const ClassifierBank& bank, const Mat& codes, const SvmHyperplane& hyperplane,
                 double alpha, const FlowModel* flow) {
  const int k_attrs = bank.size();
  if (k_attrs < 2) throw std::invalid_argument("flip rate: needs at least two attributes");
  if (hyperplane.attribute < 0 || hyperplane.attribute >= k_attrs)
    throw std::invalid_argument("flip rate: hyperplane attribute out of range");

  const Mat edited =
      flow ? edit_proxy(*flow, codes, hyperplane, alpha) : edit_original(codes, hyperplane, alpha);
  const LabelMat before = bank.predict_matrix(codes);
  const LabelMat after = bank.predict_matrix(edited);

  long flips = 0;
  for (Eigen::Index i = 0; i < before.rows(); ++i)
    for (int k = 0; k < k_attrs; ++k) {
      if (k == hyperplane.attribute) continue;
      if (before(i, k) != after(i, k)) ++flips;
    }
  return static_cast<double>(flips) /
         (static_cast<double>(before.rows()) * static_cast<double>(k_attrs - 1));
}

}  // namespace latsep
