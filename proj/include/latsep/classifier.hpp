#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <latsep/dataset.hpp>
#include <latsep/types.hpp>

namespace latsep {

// Affine score plus sigmoid. The unit normal of the decision hyperplane is
// the editing direction for this attribute.
struct LinearAttributeClassifier {
  Vec weight;       // D
  double bias = 0.0;
  bool frozen = false;

  double score(const Eigen::Ref<const RowVec>& w) const { return w.dot(weight) + bias; }
  double prob(const Eigen::Ref<const RowVec>& w) const { return sigmoid(score(w)); }
  bool predict(const Eigen::Ref<const RowVec>& w) const { return score(w) >= 0.0; }

  Vec scores(const Mat& codes) const;
  Vec probs(const Mat& codes) const;

  double weight_norm() const;
  // weight / ||weight||; throws std::runtime_error when the weight is zero.
  Vec unit_normal() const;
  // bias / ||weight||, the offset term of the signed distance.
  double distance_offset() const;
  // (w . weight + bias) / ||weight|| per row.
  Vec signed_distances(const Mat& codes) const;
};

struct ClassifierBank {
  std::vector<LinearAttributeClassifier> classifiers;
  std::vector<std::string> attribute_names;

  int size() const { return static_cast<int>(classifiers.size()); }
  int dim() const;
  bool all_frozen() const;

  Mat weight_matrix() const;       // D x K
  Mat bias_row() const;            // 1 x K
  Mat unit_normal_matrix() const;  // D x K
  Mat offset_row() const;          // 1 x K

  Mat score_matrix(const Mat& codes) const;  // N x K
  Mat prob_matrix(const Mat& codes) const;   // N x K
  // predict(row, k) as 0/1 bytes, ties classified positive.
  LabelMat predict_matrix(const Mat& codes) const;
};

// Trains one logistic classifier per attribute on the dataset codes by
// full-batch gradient descent from zero weights, then freezes the bank.
ClassifierBank pretrain_bank(const LabeledLatentDataset& dataset, int epochs, double lr,
                             std::uint64_t seed);

struct SvmHyperplane {
  Vec weight;
  double bias = 0.0;
  int attribute = 0;

  Vec unit_normal() const;
  double distance_offset() const;
  Vec signed_distances(const Mat& codes) const;
};

struct SvmParams {
  double lambda = 1e-3;
  int epochs = 20;
};

// Pegasos-style stochastic subgradient descent on
//   lambda/2 ||v||^2 + mean_i hinge(1 - y~_i (v . x_i + b)),
// y~ in {-1,+1}, bias unregularized, returning the averaged iterate.
// Throws std::runtime_error when only one class is present.
SvmHyperplane train_svm(const Mat& codes, const Eigen::Ref<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>& labels,
                        int attribute, const SvmParams& params, std::uint64_t seed);

// Fraction of sign-correct predictions; score exactly zero counts positive.
double svm_accuracy(const SvmHyperplane& h, const Mat& codes,
                    const Eigen::Ref<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>& labels);

// Regularized hinge objective the trainer minimizes; exposed for oracles.
double svm_objective(const Vec& weight, double bias, double lambda, const Mat& codes,
                     const Eigen::Ref<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>& labels);

}  // namespace latsep
