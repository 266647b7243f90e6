#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dv {

enum class Split { kTrain, kValidation };

// Dense row-major feature matrix with integer class labels.
struct TabularDataset {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t num_classes = 2;
  std::vector<double> features;
  std::vector<int> labels;
  Split split = Split::kTrain;

  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * dim, dim};
  }
  std::size_t size() const noexcept { return rows; }
  // Throws InvalidParam when shapes or labels are inconsistent.
  void validate() const;
};

struct DatasetPair {
  TabularDataset train;
  TabularDataset validation;
};

inline constexpr std::size_t kSyntheticValidationSize = 200;

// Two features drawn from N((0.1, -0.1), I); label 1 iff the features sum to
// a positive number. The validation split comes from the same law.
DatasetPair synthetic_gaussian_dataset(std::size_t n_points, std::uint64_t seed,
                                       std::size_t validation_points = kSyntheticValidationSize);

struct FlipResult {
  TabularDataset dataset;
  std::vector<std::size_t> flipped;  // sorted
};

// Flips floor(fraction * rows) distinct labels, each to a uniformly chosen
// different class.
FlipResult flip_labels(const TabularDataset& dataset, double fraction, std::uint64_t seed);

// CSV with a header row; the last column is the label. Numeric labels that are
// non-negative integers are used as class ids, anything else is mapped to ids
// in sorted order.
TabularDataset read_csv_dataset(const std::string& path);

// Seeded random split holding out round(validation_fraction * rows) rows.
DatasetPair train_validation_split(const TabularDataset& dataset, double validation_fraction,
                                   std::uint64_t seed);

// Label of the most frequent class (ties to the smaller id) and its share.
std::pair<int, double> majority_class(const TabularDataset& dataset);

}  // namespace dv
