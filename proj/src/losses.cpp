#include <latsep/losses.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace latsep {

void TrainConfig::validate() const {
  if (lambda_lm < 0.0 || lambda_ap < 0.0)
    throw std::invalid_argument("train config: loss weights must be >= 0");
  if (lr <= 0.0) throw std::invalid_argument("train config: lr must be positive");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("train config: betas must lie in (0, 1)");
  if (batch_size < 1) throw std::invalid_argument("train config: batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
}

namespace {

// Frozen bank parameters as constant tape leaves.
struct BankConstants {
  ad::Var weights;  // D x K
  ad::Var biases;   // 1 x K
  ad::Var normals;  // D x K unit hyperplane normals
  ad::Var offsets;  // 1 x K signed-distance offsets
};

BankConstants bank_constants(ad::Tape& tape, const ClassifierBank& bank) {
  return BankConstants{tape.leaf(bank.weight_matrix()), tape.leaf(bank.bias_row()),
                       tape.leaf(bank.unit_normal_matrix()), tape.leaf(bank.offset_row())};
}

Mat sign_matrix(const LabelMat& labels) {
  Mat s(labels.rows(), labels.cols());
  for (Eigen::Index i = 0; i < labels.rows(); ++i)
    for (Eigen::Index k = 0; k < labels.cols(); ++k) s(i, k) = labels(i, k) ? 1.0 : -1.0;
  return s;
}

// Sum_k BCE(sigmoid(score_k), y_k) averaged over the batch, written as
// log(1 + exp(-y~ * score)) so saturated probabilities never reach log(0).
ad::Var bce_node(ad::Tape& tape, const BankConstants& bank, ad::Var wstar, const LabelMat& labels) {
  const Eigen::Index n = wstar.value().rows();
  ad::Var scores = ad::add(ad::matmul(wstar, bank.weights), bank.biases);
  ad::Var aligned = ad::hadamard(scores, tape.leaf(sign_matrix(labels)));
  ad::Var ones = tape.leaf(Mat::Ones(n, labels.cols()));
  ad::Var losses = ad::log(ad::add(ad::exp(ad::scale(aligned, -1.0)), ones));
  return ad::scale(ad::sum_all(losses), 1.0 / static_cast<double>(n));
}

// -|s| where the frozen classifier agrees with the label, +|s| where it does
// not; the correctness indicator is a constant of the current batch.
ad::Var large_margin_node(ad::Tape& tape, const BankConstants& bank, ad::Var wstar,
                          const LabelMat& labels) {
  const Eigen::Index n = wstar.value().rows();
  ad::Var dist = ad::add(ad::matmul(wstar, bank.normals), bank.offsets);
  const Mat& d = dist.value();
  Mat coeff(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      const bool predicted = d(i, k) >= 0.0;
      const bool correct = predicted == (labels(i, k) != 0);
      coeff(i, k) = correct ? -1.0 : 1.0;
    }
  ad::Var signed_abs = ad::hadamard(ad::abs(dist), tape.leaf(coeff));
  return ad::scale(ad::sum_all(signed_abs), 1.0 / static_cast<double>(n));
}

// Edits the proxy code along the frozen normal of the chosen attribute, maps
// back, and penalizes probability shifts of every other attribute in the
// original space. Gradients reach the flow through both passes.
ad::Var preservation_node(ad::Tape& tape, const BankConstants& bankc, const ClassifierBank& bank,
                          const FlowModel& model, const FlowBinding& binding, ad::Var wstar,
                          const Mat& batch, int edit_attribute, double edit_step) {
  const Eigen::Index n = batch.rows();
  const int k_attrs = bank.size();

  Mat step(1, model.dim());
  step.row(0) =
      edit_step * bank.classifiers[static_cast<std::size_t>(edit_attribute)].unit_normal();
  ad::Var edited = ad::add(wstar, tape.leaf(step));
  ad::Var back = taped_inverse(model, binding, edited);

  ad::Var probs_edited = ad::sigmoid(ad::add(ad::matmul(back, bankc.weights), bankc.biases));
  ad::Var probs_before = tape.leaf(bank.prob_matrix(batch));
  ad::Var diff = ad::abs(ad::sub(probs_before, probs_edited));

  Mat mask = Mat::Ones(n, k_attrs);
  mask.col(edit_attribute).setZero();
  ad::Var kept = ad::hadamard(diff, tape.leaf(mask));
  return ad::scale(ad::sum_all(kept), 1.0 / static_cast<double>(n));
}

void check_dims(const ClassifierBank& bank, const FlowModel& model, const Mat& batch) {
  if (bank.dim() != model.dim())
    throw std::invalid_argument("classifier bank dimension does not match flow dimension");
  if (batch.cols() != model.dim())
    throw std::invalid_argument("batch width does not match flow dimension");
}

}  // namespace

LossGraph build_loss_graph(ad::Tape& tape, const ClassifierBank& bank, const FlowModel& model,
                           const Mat& batch, const LabelMat& batch_labels, int edit_attribute,
                           double edit_step, const TrainConfig& config) {
  check_dims(bank, model, batch);
  if (edit_attribute < 0 || edit_attribute >= bank.size())
    throw std::invalid_argument("edit attribute out of range");

  LossGraph g;
  g.binding = bind_flow(tape, model);
  ad::Var input = tape.leaf(batch);
  ad::Var wstar = taped_forward(model, g.binding, input);
  BankConstants bankc = bank_constants(tape, bank);

  g.attribute = bce_node(tape, bankc, wstar, batch_labels);
  g.large_margin = large_margin_node(tape, bankc, wstar, batch_labels);
  g.preservation =
      preservation_node(tape, bankc, bank, model, g.binding, wstar, batch, edit_attribute, edit_step);
  g.total = ad::add(ad::add(g.attribute, ad::scale(g.large_margin, config.lambda_lm)),
                    ad::scale(g.preservation, config.lambda_ap));
  return g;
}

double loss_attribute(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                      const LabelMat& batch_labels) {
  check_dims(bank, model, batch);
  ad::Tape tape;
  FlowBinding binding = bind_flow(tape, model);
  ad::Var wstar = taped_forward(model, binding, tape.leaf(batch));
  return bce_node(tape, bank_constants(tape, bank), wstar, batch_labels).value()(0, 0);
}

double loss_large_margin(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                         const LabelMat& batch_labels) {
  check_dims(bank, model, batch);
  ad::Tape tape;
  FlowBinding binding = bind_flow(tape, model);
  ad::Var wstar = taped_forward(model, binding, tape.leaf(batch));
  return large_margin_node(tape, bank_constants(tape, bank), wstar, batch_labels).value()(0, 0);
}

double loss_attribute_preservation(const ClassifierBank& bank, const FlowModel& model,
                                   const Mat& batch, int edit_attribute, double edit_step) {
  check_dims(bank, model, batch);
  if (edit_attribute < 0 || edit_attribute >= bank.size())
    throw std::invalid_argument("edit attribute out of range");
  ad::Tape tape;
  FlowBinding binding = bind_flow(tape, model);
  ad::Var wstar = taped_forward(model, binding, tape.leaf(batch));
  return preservation_node(tape, bank_constants(tape, bank), bank, model, binding, wstar, batch,
                           edit_attribute, edit_step)
      .value()(0, 0);
}

LossParts total_loss(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                     const LabelMat& batch_labels, int edit_attribute, double edit_step,
                     const TrainConfig& config) {
  ad::Tape tape;
  LossGraph g =
      build_loss_graph(tape, bank, model, batch, batch_labels, edit_attribute, edit_step, config);
  return LossParts{g.attribute.value()(0, 0), g.large_margin.value()(0, 0),
                   g.preservation.value()(0, 0), g.total.value()(0, 0)};
}

void adam_step(const std::vector<Mat*>& params, const std::vector<Mat>& grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  if (state.step == 0 && state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Mat* p : params) {
      state.m.push_back(Mat::Zero(p->rows(), p->cols()));
      state.v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam: state does not match parameter count");

  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& m = state.m[i];
    Mat& v = state.v[i];
    const Mat& g = grads[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    params[i]->array() -=
        config.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.eps);
  }
}

TrainingDiverged::TrainingDiverged(int epoch_, int batch_, const LossParts& parts_)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) + " batch " +
                         std::to_string(batch_) + ": total=" + std::to_string(parts_.total)),
      epoch(epoch_),
      batch(batch_),
      parts(parts_) {}

namespace {

double median_abs(const Mat& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(idx++)] = std::abs(m(i, j));
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  return med;
}

}  // namespace

FlowModel train_proxy(const LabeledLatentDataset& dataset, const ClassifierBank& bank,
                      FlowModel model, const TrainConfig& config, std::ostream* loss_log) {
  config.validate();
  dataset.validate();
  if (!bank.all_frozen()) throw std::logic_error("train_proxy: classifier bank must be frozen");
  if (bank.size() != dataset.num_attributes())
    throw std::invalid_argument("train_proxy: bank/dataset attribute count mismatch");
  if (bank.dim() != model.dim() || dataset.dim() != model.dim())
    throw std::invalid_argument("train_proxy: dimension mismatch");

  const int n = dataset.num_samples();
  const int k_attrs = bank.size();

  std::vector<Mat*> params;
  model.visit_parameters([&params](Mat& m) { params.push_back(&m); });
  AdamState state;

  const Mat normals = bank.unit_normal_matrix();
  const Mat offsets = bank.offset_row();

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> attr_dist(0, k_attrs - 1);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  std::vector<Mat> grads;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    int batch_index = 0;
    for (int start = 0; start < n; start += config.batch_size, ++batch_index) {
      const int count = std::min(config.batch_size, n - start);
      std::vector<int> rows(order.begin() + start, order.begin() + start + count);
      const Mat batch = gather_rows(dataset.codes, rows);
      const LabelMat batch_labels = gather_rows(dataset.labels, rows);

      const int edit_attribute = attr_dist(rng);
      double range = config.edit_step_range;
      if (range <= 0.0) {
        const Mat dists = (model.forward(batch) * normals).rowwise() + offsets.row(0);
        range = 3.0 * median_abs(dists);
      }
      std::uniform_real_distribution<double> step_dist(-range, range);
      const double edit_step = step_dist(rng);

      ad::Tape tape;
      LossGraph g = build_loss_graph(tape, bank, model, batch, batch_labels, edit_attribute,
                                     edit_step, config);
      const LossParts parts{g.attribute.value()(0, 0), g.large_margin.value()(0, 0),
                            g.preservation.value()(0, 0), g.total.value()(0, 0)};
      if (!std::isfinite(parts.total)) throw TrainingDiverged(epoch, batch_index, parts);

      ad::backward(g.total);
      grads.clear();
      grads.reserve(g.binding.params.size());
      for (const ad::Var& p : g.binding.params) grads.push_back(p.grad());
      adam_step(params, grads, state, config);

      if (loss_log) {
        char line[192];
        std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", epoch, batch_index,
                      parts.attribute, parts.large_margin, parts.preservation, parts.total);
        (*loss_log) << line;
      }
    }
  }
  return model;
}

}  // namespace latsep
