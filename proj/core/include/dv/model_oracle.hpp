#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>

#include "dv/dataset.hpp"
#include "dv/eval_cache.hpp"
#include "dv/oracle.hpp"
#include "dv/trainer.hpp"

namespace dv {

enum class Metric { kAccuracy };

// U(S) = validation accuracy of the model trained on S. U(empty) is the
// majority-class accuracy on the validation split. Deterministic iff the
// trainer is; stochastic oracles train with the eval_seed as their seed.
class ModelUtilityOracle final : public UtilityOracle {
 public:
  ModelUtilityOracle(std::shared_ptr<const TabularDataset> train,
                     std::shared_ptr<const TabularDataset> validation, TrainerConfig config,
                     Metric metric = Metric::kAccuracy,
                     std::shared_ptr<EvalCache> cache = nullptr);

  std::size_t n() const override { return train_->rows; }
  double evaluate(const SubsetKey& subset, std::uint64_t eval_seed) const override;
  bool deterministic() const override { return config_.deterministic(); }
  std::string description() const override { return description_; }

  // Number of model fits performed (cache hits and U(empty) excluded).
  std::size_t trainings() const noexcept { return trainings_.load(); }
  const TrainerConfig& config() const noexcept { return config_; }
  const TabularDataset& train_set() const noexcept { return *train_; }
  const TabularDataset& validation_set() const noexcept { return *validation_; }

 private:
  double compute(const SubsetKey& subset, std::uint64_t eval_seed) const;

  std::shared_ptr<const TabularDataset> train_;
  std::shared_ptr<const TabularDataset> validation_;
  TrainerConfig config_;
  Metric metric_;
  std::shared_ptr<EvalCache> cache_;
  std::string description_;
  std::uint64_t description_hash_;
  double empty_score_;
  mutable std::atomic<std::size_t> trainings_{0};
};

std::shared_ptr<ModelUtilityOracle> make_oracle(const TabularDataset& train,
                                                const TabularDataset& validation,
                                                const TrainerConfig& config,
                                                Metric metric = Metric::kAccuracy,
                                                std::shared_ptr<EvalCache> cache = nullptr);

// Stable content hash of a dataset (features bit patterns and labels).
std::uint64_t dataset_hash(const TabularDataset& dataset);

}  // namespace dv
