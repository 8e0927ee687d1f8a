#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <latsep/classifier.hpp>
#include <latsep/dataset.hpp>
#include <latsep/flow.hpp>

namespace latsep {

// Dataset file, version LDS1: a text manifest (dim, attributes, samples,
// names, provenance, seed), a "---" separator line, then N*D little-endian
// 32-bit floats of codes in row-major order followed by N*K label bytes.
// save -> load -> save reproduces the file byte for byte.
void save_dataset(const LabeledLatentDataset& dataset, const std::string& path);
LabeledLatentDataset load_dataset(const std::string& path);

// Everything a pipeline stage needs: the flow, the frozen classifier bank
// and optional per-space SVM hyperplane sets for editing.
struct ModelBundle {
  FlowModel flow;
  ClassifierBank bank;
  std::vector<SvmHyperplane> svm_original;  // empty or one per attribute
  std::vector<SvmHyperplane> svm_proxy;
  std::string config_echo;  // key=value;... echo of the training config
  std::uint64_t seed = 0;

  const std::vector<SvmHyperplane>& hyperplanes(bool proxy) const {
    return proxy ? svm_proxy : svm_original;
  }
};

// Model file, version NFM1: a text manifest declaring the architecture,
// attribute names, which hyperplane sets are present, the config echo and
// the total parameter count, then all parameters as little-endian 64-bit
// floats in declared order (flow, bank, original SVMs, proxy SVMs).
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

// Writes through a temp file in the same directory and renames into place.
void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace latsep
