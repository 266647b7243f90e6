#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dv/dataset.hpp"
#include "dv/subset.hpp"

namespace dv {

enum class ModelKind { kLogisticRegression, kLinear };
enum class OptimizerKind { kFullBatchGd, kMinibatchSgd, kSmoothedGd };
enum class InitKind { kZeros, kGaussian };

std::string_view to_string(ModelKind kind);
std::string_view to_string(OptimizerKind kind);
ModelKind parse_model(std::string_view text);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainerConfig {
  ModelKind model = ModelKind::kLogisticRegression;
  OptimizerKind optimizer = OptimizerKind::kFullBatchGd;
  double learning_rate = 0.5;
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  InitKind init = InitKind::kZeros;
  double init_scale = 0.01;
  double smoothing_radius = 0.0;     // alpha, smoothed_gd only
  std::size_t smoothing_samples = 1;  // l, smoothed_gd only
  std::uint64_t seed = 0;

  void validate() const;
  // Full-batch GD from zeros has no randomness at all.
  bool deterministic() const {
    return optimizer == OptimizerKind::kFullBatchGd && init == InitKind::kZeros;
  }
  std::string description() const;
};

// Affine model with `outputs` rows of (dim weights, bias). Binary problems use
// a single output.
struct LinearModel {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t dim = 0;
  std::size_t num_classes = 2;
  std::vector<double> params;

  std::size_t outputs() const noexcept { return num_classes == 2 ? 1 : num_classes; }
  int predict(std::span<const double> x) const;
};

LinearModel initial_model(const TrainerConfig& config, std::size_t dim, std::size_t num_classes,
                          std::uint64_t seed);

// Trains on the rows of `dataset` selected by `subset` (subset.n() must equal
// dataset.rows). `seed` drives every random choice of stochastic optimizers
// and Gaussian init. When inclusion_prob is non-empty each row enters each
// epoch's loss independently with that probability.
LinearModel train(const TrainerConfig& config, const SubsetKey& subset,
                  const TabularDataset& dataset, std::uint64_t seed,
                  std::span<const double> inclusion_prob = {});
inline LinearModel train(const TrainerConfig& config, const SubsetKey& subset,
                         const TabularDataset& dataset) {
  return train(config, subset, dataset, config.seed);
}

double accuracy(const LinearModel& model, const TabularDataset& dataset);

// Mean training loss over `rows`; writes its gradient into `grad` when given.
double mean_loss(const LinearModel& model, const TabularDataset& dataset,
                 std::span<const std::size_t> rows, std::vector<double>* grad = nullptr);

}  // namespace dv
