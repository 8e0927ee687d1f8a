#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <latsep/autodiff.hpp>
#include <latsep/classifier.hpp>
#include <latsep/dataset.hpp>
#include <latsep/flow.hpp>

namespace latsep {

struct TrainConfig {
  double lambda_lm = 0.1;
  double lambda_ap = 0.1;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 8;
  int epochs = 5;
  // Training-time edit magnitude is uniform in [-r, +r]. r <= 0 selects the
  // automatic range: 3x the batch median absolute signed distance.
  double edit_step_range = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossParts {
  double attribute = 0.0;
  double large_margin = 0.0;
  double preservation = 0.0;
  double total = 0.0;
};

inline double combine_losses(double attribute, double large_margin, double preservation,
                             const TrainConfig& config) {
  return attribute + config.lambda_lm * large_margin + config.lambda_ap * preservation;
}

// Full taped loss for one batch. The flow parameters are bound as leaves so
// backward() fills their gradients; the frozen bank enters as constants.
struct LossGraph {
  ad::Var attribute;
  ad::Var large_margin;
  ad::Var preservation;
  ad::Var total;
  FlowBinding binding;
};

LossGraph build_loss_graph(ad::Tape& tape, const ClassifierBank& bank, const FlowModel& model,
                           const Mat& batch, const LabelMat& batch_labels, int edit_attribute,
                           double edit_step, const TrainConfig& config);

// Scalar evaluations of the individual terms (mean over the batch).
double loss_attribute(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                      const LabelMat& batch_labels);
double loss_large_margin(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                         const LabelMat& batch_labels);
double loss_attribute_preservation(const ClassifierBank& bank, const FlowModel& model,
                                   const Mat& batch, int edit_attribute, double edit_step);
LossParts total_loss(const ClassifierBank& bank, const FlowModel& model, const Mat& batch,
                     const LabelMat& batch_labels, int edit_attribute, double edit_step,
                     const TrainConfig& config);

struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;
};

// Bias-corrected Adam update, in place. State is created lazily on first use
// and must keep matching the parameter shapes afterwards.
void adam_step(const std::vector<Mat*>& params, const std::vector<Mat>& grads, AdamState& state,
               const TrainConfig& config);

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch, int batch, const LossParts& parts);
  int epoch;
  int batch;
  LossParts parts;
};

// Optimizes only the flow. Per batch, the edited attribute is sampled
// uniformly and the edit step uniformly from the configured range; the bank
// stays frozen throughout. Writes one line per batch to loss_log when given:
// epoch,batch,loss_attribute,loss_large_margin,loss_preservation,loss_total
FlowModel train_proxy(const LabeledLatentDataset& dataset, const ClassifierBank& bank,
                      FlowModel model, const TrainConfig& config, std::ostream* loss_log = nullptr);

}  // namespace latsep
