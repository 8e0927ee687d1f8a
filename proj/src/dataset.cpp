#include <latsep/dataset.hpp>

#include <random>
#include <stdexcept>

namespace latsep {

void LabeledLatentDataset::validate() const {
  if (codes.rows() != labels.rows())
    throw std::runtime_error("dataset: " + std::to_string(codes.rows()) + " code rows vs " +
                             std::to_string(labels.rows()) + " label rows");
  if (static_cast<int>(attribute_names.size()) != num_attributes())
    throw std::runtime_error("dataset: attribute name count does not match label columns");
  if (!codes.allFinite()) throw std::runtime_error("dataset: non-finite code entry");
  for (Eigen::Index i = 0; i < labels.rows(); ++i)
    for (Eigen::Index k = 0; k < labels.cols(); ++k)
      if (labels(i, k) > 1)
        throw std::runtime_error("dataset: label not in {0,1} at row " + std::to_string(i));
}

std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

TrainValSplit split_80_20(int n, std::uint64_t seed) {
  std::vector<int> idx = shuffled_indices(n, seed);
  const int train_count = (n * 8) / 10;
  TrainValSplit split;
  split.train.assign(idx.begin(), idx.begin() + train_count);
  split.validation.assign(idx.begin() + train_count, idx.end());
  return split;
}

Mat gather_rows(const Mat& m, const std::vector<int>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

LabelMat gather_rows(const LabelMat& m, const std::vector<int>& idx) {
  LabelMat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace latsep
