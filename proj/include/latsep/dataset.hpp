#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <latsep/types.hpp>

namespace latsep {

// Latent codes with K binary attribute labels. Codes live in whatever space
// the caller put them in; provenance records where they came from.
struct LabeledLatentDataset {
  Mat codes;       // N x D
  LabelMat labels; // N x K, entries in {0, 1}
  std::vector<std::string> attribute_names;
  std::string provenance = "synthetic";
  std::uint64_t seed = 0;

  int num_samples() const { return static_cast<int>(codes.rows()); }
  int dim() const { return static_cast<int>(codes.cols()); }
  int num_attributes() const { return static_cast<int>(labels.cols()); }

  // Throws std::runtime_error on shape mismatch, non-binary labels or
  // non-finite codes.
  void validate() const;
};

// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<int> shuffled_indices(int n, std::uint64_t seed);

struct TrainValSplit {
  std::vector<int> train;
  std::vector<int> validation;
};

// Deterministic 80/20 split: shuffle with the seed, first floor(0.8 n) rows
// train, rest validation.
TrainValSplit split_80_20(int n, std::uint64_t seed);

Mat gather_rows(const Mat& m, const std::vector<int>& idx);
LabelMat gather_rows(const LabelMat& m, const std::vector<int>& idx);

}  // namespace latsep
