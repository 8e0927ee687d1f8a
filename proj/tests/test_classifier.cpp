#include <doctest.h>

#include <cmath>
#include <random>

#include <latsep/classifier.hpp>

#include "test_util.hpp"

using namespace latsep;
using latsep::testutil::random_mat;

namespace {

using LabelCol = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

// two tight clusters at +-center along the first coordinate
LabeledLatentDataset two_clusters(int n, int dim, double center, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.2);
  LabeledLatentDataset ds;
  ds.codes.resize(n, dim);
  ds.labels.resize(n, 1);
  ds.attribute_names = {"side"};
  for (int i = 0; i < n; ++i) {
    const double side = i % 2 == 0 ? 1.0 : -1.0;
    for (int d = 0; d < dim; ++d) ds.codes(i, d) = gauss(rng);
    ds.codes(i, 0) += side * center;
    ds.labels(i, 0) = side > 0 ? 1 : 0;
  }
  return ds;
}

LabeledLatentDataset random_labels_dataset(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledLatentDataset ds;
  ds.codes = random_mat(n, dim, seed + 1);
  ds.labels.resize(n, 1);
  ds.attribute_names = {"noise"};
  for (int i = 0; i < n; ++i) ds.labels(i, 0) = rng() % 2 ? 1 : 0;
  return ds;
}

double bank_train_accuracy(const ClassifierBank& bank, const LabeledLatentDataset& ds, int attr) {
  const LabelMat predicted = bank.predict_matrix(ds.codes);
  int correct = 0;
  for (int i = 0; i < ds.num_samples(); ++i)
    if (predicted(i, attr) == ds.labels(i, attr)) ++correct;
  return static_cast<double>(correct) / ds.num_samples();
}

// margin-1 toy: first coordinate is +-1 and decides the label, the second is
// uninformative noise
LabeledLatentDataset margin_one_2d(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  LabeledLatentDataset ds;
  ds.codes.resize(n, 2);
  ds.labels.resize(n, 1);
  ds.attribute_names = {"sign"};
  for (int i = 0; i < n; ++i) {
    const double x = i % 2 == 0 ? 1.0 : -1.0;
    ds.codes(i, 0) = x;
    ds.codes(i, 1) = noise(rng);
    ds.labels(i, 0) = x > 0 ? 1 : 0;
  }
  return ds;
}

double grid_search_min_objective(const Mat& codes, const LabelCol& labels, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  Vec v(2);
  for (double v0 = -3.0; v0 <= 3.0; v0 += 0.05)
    for (double v1 = -3.0; v1 <= 3.0; v1 += 0.05)
      for (double b = -1.0; b <= 1.0; b += 0.1) {
        v << v0, v1;
        best = std::min(best, svm_objective(v, b, lambda, codes, labels));
      }
  return best;
}

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("probability is exactly one half on the hyperplane") {
  LinearAttributeClassifier c{Vec::Ones(3), -3.0, true};
  RowVec w(3);
  w << 1.0, 1.0, 1.0;  // score = 3 - 3 = 0
  CHECK(c.prob(w) == 0.5);
}

TEST_CASE("sigma(ln 3) = 3/4") {
  LinearAttributeClassifier c;
  c.weight = Vec::Zero(2);
  c.weight(0) = 1.0;
  RowVec w(2);
  w << std::log(3.0), 7.0;
  CHECK(c.prob(w) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("probability is monotone along the unit normal") {
  LinearAttributeClassifier c{(Vec(2) << 2.0, -1.0).finished(), 0.3, true};
  const Vec d = c.unit_normal();
  RowVec w(2);
  w << 0.4, -0.2;
  double previous = c.prob(w);
  for (double eps : {0.1, 0.5, 2.0}) {
    const RowVec moved = w + eps * d.transpose();
    CHECK(c.prob(moved) > previous);
    previous = c.prob(moved);
  }
}

TEST_CASE("reflection across the hyperplane complements the probability") {
  LinearAttributeClassifier c{(Vec(3) << 1.0, -2.0, 0.5).finished(), 0.7, true};
  const Vec d = c.unit_normal();
  const Mat points = random_mat(20, 3, 4);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const RowVec w = points.row(i);
    const double dist = c.signed_distances(w)(0);
    const RowVec reflected = w - 2.0 * dist * d.transpose();
    CHECK(c.prob(w) + c.prob(reflected) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pretraining separates a separable toy") {
  const LabeledLatentDataset ds = two_clusters(200, 2, 2.0, 1);
  const ClassifierBank bank = pretrain_bank(ds, 50, 1e-2, 1);
  CHECK(bank.all_frozen());
  CHECK(bank_train_accuracy(bank, ds, 0) == 1.0);
}

TEST_CASE("random labels stay at chance level") {
  const LabeledLatentDataset ds = random_labels_dataset(2000, 8, 2);
  const ClassifierBank bank = pretrain_bank(ds, 50, 1e-2, 2);
  const double acc = bank_train_accuracy(bank, ds, 0);
  CHECK(acc > 0.45);
  CHECK(acc < 0.55);
}

TEST_CASE("pretraining is deterministic under the seed") {
  const LabeledLatentDataset ds = two_clusters(100, 3, 1.5, 3);
  const ClassifierBank a = pretrain_bank(ds, 20, 1e-2, 9);
  const ClassifierBank b = pretrain_bank(ds, 20, 1e-2, 9);
  for (int k = 0; k < a.size(); ++k) {
    CHECK(a.classifiers[k].weight == b.classifiers[k].weight);
    CHECK(a.classifiers[k].bias == b.classifiers[k].bias);
  }
  CHECK_THROWS_AS(pretrain_bank(LabeledLatentDataset{}, 10, 1e-2, 0), std::runtime_error);
}

TEST_CASE("svm recovers the separating axis on the 2d toy") {
  const LabeledLatentDataset ds = margin_one_2d(400, 5);
  const LabelCol labels = ds.labels.col(0);
  const SvmHyperplane h = train_svm(ds.codes, labels, 0, SvmParams{}, 5);
  CHECK(svm_accuracy(h, ds.codes, labels) == 1.0);
  const Vec normal = h.unit_normal();
  CHECK(std::abs(normal(0)) > 0.99);  // +-(1, 0) up to sign
}

TEST_CASE("pegasos objective is near the grid-search oracle") {
  const LabeledLatentDataset ds = margin_one_2d(200, 6);
  const LabelCol labels = ds.labels.col(0);
  const double lambda = 1e-3;
  const SvmHyperplane h = train_svm(ds.codes, labels, 0, SvmParams{lambda, 20}, 6);
  const double trained = svm_objective(h.weight, h.bias, lambda, ds.codes, labels);
  const double oracle = grid_search_min_objective(ds.codes, labels, lambda);
  CHECK(trained <= oracle * 1.05);
  CHECK(trained >= oracle * 0.95);
}

TEST_CASE("svm training is deterministic under the seed") {
  const LabeledLatentDataset ds = margin_one_2d(100, 7);
  const LabelCol labels = ds.labels.col(0);
  const SvmHyperplane a = train_svm(ds.codes, labels, 0, SvmParams{}, 13);
  const SvmHyperplane b = train_svm(ds.codes, labels, 0, SvmParams{}, 13);
  CHECK(a.weight == b.weight);
  CHECK(a.bias == b.bias);
}

TEST_CASE("single-class data is rejected") {
  Mat codes = random_mat(10, 2, 8);
  LabelCol labels = LabelCol::Ones(10);
  CHECK_THROWS_AS((void)train_svm(codes, labels, 0, SvmParams{}, 0), std::runtime_error);
}

TEST_CASE("decisions survive feature rescaling with compensated regularization") {
  const LabeledLatentDataset ds = margin_one_2d(200, 9);
  const LabelCol labels = ds.labels.col(0);
  const double c = 4.0;
  const SvmHyperplane base = train_svm(ds.codes, labels, 0, SvmParams{1e-3, 20}, 9);
  const SvmHyperplane scaled =
      train_svm(Mat(c * ds.codes), labels, 0, SvmParams{1e-3 / (c * c), 20}, 9);
  for (Eigen::Index i = 0; i < ds.codes.rows(); ++i) {
    const bool p1 = ds.codes.row(i).dot(base.weight) + base.bias >= 0.0;
    const bool p2 = c * ds.codes.row(i).dot(scaled.weight) + scaled.bias >= 0.0;
    CHECK(p1 == p2);
  }
}

TEST_CASE("accuracy of perfect and constant predictors") {
  const LabeledLatentDataset ds = margin_one_2d(100, 10);
  const LabelCol labels = ds.labels.col(0);
  SvmHyperplane perfect{(Vec(2) << 1.0, 0.0).finished(), 0.0, 0};
  CHECK(svm_accuracy(perfect, ds.codes, labels) == 1.0);
  // zero weight, positive bias: always predicts the positive class
  SvmHyperplane constant{Vec::Zero(2), 1.0, 0};
  CHECK(svm_accuracy(constant, ds.codes, labels) == 0.5);
}

}  // TEST_SUITE
