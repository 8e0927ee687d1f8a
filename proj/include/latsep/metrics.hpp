#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <latsep/classifier.hpp>
#include <latsep/dataset.hpp>
#include <latsep/flow.hpp>
#include <latsep/lasso.hpp>
#include <latsep/types.hpp>

namespace latsep {

struct SeparabilityReport {
  std::vector<std::string> attribute_names;
  std::vector<double> accuracy;       // validation accuracy, NaN for skipped
  std::vector<bool> skipped;          // degenerate attributes
  std::vector<SvmHyperplane> hyperplanes;  // empty weight for skipped
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double mean_accuracy = 0.0;
};

// Fresh SVM per attribute on the deterministic 80% split, validation
// accuracy on the rest. Attributes with a single class in either part are
// skipped with a warning on stderr; all-degenerate data is an error.
SeparabilityReport separability(const Mat& codes, const LabelMat& labels,
                                const std::vector<std::string>& attribute_names,
                                std::uint64_t seed, const SvmParams& svm = {});

struct DciReport {
  double disentanglement = 0.0;
  double completeness = 0.0;
  double informativeness = 0.0;  // held-out classification error, lower is better
  bool degenerate = false;
};

struct DciScores {
  double disentanglement = 0.0;
  double completeness = 0.0;
};

// Entropy-weighted scores of a nonnegative K x D importance matrix.
// Disentanglement weighs each dimension by its share of total importance;
// completeness averages over attributes. Zero rows and columns contribute
// nothing and carry no weight. Invariant under global positive rescaling.
DciScores dci_scores(const Mat& importance);

struct DciResult {
  DciReport report;
  Mat importance;  // K x D absolute lasso coefficients
};

// One lasso regressor per attribute on an n_samples subset (80% fit / 20%
// held out); importance is |coefficient|, informativeness the mean held-out
// error of predictions thresholded at 0.5.
DciResult dci(const Mat& codes, const LabelMat& labels, int n_samples, double lasso_alpha,
              std::uint64_t seed, int lasso_max_sweeps = 1000);

// Mean over samples and non-target attributes of "the frozen classifier's
// decision changed after the edit". The referees always judge in the
// original space; a null flow edits there too, otherwise the edit steps in
// the proxy space and maps back.
double flip_rate(const ClassifierBank& bank, const Mat& codes, const SvmHyperplane& hyperplane,
                 double alpha, const FlowModel* flow);

}  // namespace latsep
