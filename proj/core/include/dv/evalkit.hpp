#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dv/dataset.hpp"
#include "dv/trainer.hpp"

namespace dv {

struct RankReport {
  double spearman = 0.0;
  std::size_t n = 0;
  std::string tie_policy = "average_rank";
  bool degenerate = false;  // one input was constant; spearman reported as 0
};

// 1-based ranks, ties share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

RankReport spearman(std::span<const double> a, std::span<const double> b);

enum class Side { kTop, kBottom };

// |intersection of each run's top (bottom) ceil(k% n) set| / ceil(k% n).
double topk_consistency(const std::vector<std::vector<double>>& runs, double k_percent,
                        Side side);

struct DetectionReport {
  double threshold_percentile = 10.0;
  double threshold_value = 0.0;
  std::vector<std::size_t> predicted;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool undefined = false;  // empty ground truth or empty prediction
};

// Flags every point whose value is at or below the nearest-rank percentile.
DetectionReport mislabel_detect(std::span<const double> values,
                                std::span<const std::size_t> ground_truth,
                                double percentile = 10.0);

struct WeightedTrainingReport {
  double mean_accuracy = 0.0;
  double stderr_accuracy = 0.0;
  std::vector<double> accuracies;
  std::vector<double> weights;  // min-max normalized values
  bool degenerate_weights = false;
};

// Min-max normalizes `values` into inclusion probabilities and trains with
// per-epoch Bernoulli inclusion, `trials` times with derived seeds.
WeightedTrainingReport weighted_sample_training(std::span<const double> values,
                                                const TabularDataset& train,
                                                const TabularDataset& validation,
                                                const TrainerConfig& config, std::size_t trials,
                                                std::uint64_t seed, std::size_t workers = 1);

}  // namespace dv
