#include "dv/model_oracle.hpp"

#include <bit>
#include <cstdio>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

std::uint64_t dataset_hash(const TabularDataset& dataset) {
  std::uint64_t h = mix64(dataset.rows ^ (dataset.dim << 32) ^ (dataset.num_classes << 48));
  for (double x : dataset.features) h = mix64(h ^ std::bit_cast<std::uint64_t>(x));
  for (int y : dataset.labels) h = mix64(h ^ static_cast<std::uint64_t>(y));
  return h;
}

ModelUtilityOracle::ModelUtilityOracle(std::shared_ptr<const TabularDataset> train,
                                       std::shared_ptr<const TabularDataset> validation,
                                       TrainerConfig config, Metric metric,
                                       std::shared_ptr<EvalCache> cache)
    : train_(std::move(train)),
      validation_(std::move(validation)),
      config_(config),
      metric_(metric),
      cache_(std::move(cache)) {
  if (!train_ || !validation_) throw Error(ErrorCode::kInvalidParam, "null dataset");
  train_->validate();
  validation_->validate();
  config_.validate();
  if (train_->rows == 0) throw Error(ErrorCode::kInvalidParam, "empty training set");
  if (validation_->rows == 0) throw Error(ErrorCode::kInvalidParam, "validation split is empty");
  if (train_->dim != validation_->dim) {
    throw Error(ErrorCode::kLengthMismatch, "train/validation feature dims differ");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx-%016llx",
                static_cast<unsigned long long>(dataset_hash(*train_)),
                static_cast<unsigned long long>(dataset_hash(*validation_)));
  description_ = "accuracy[" + std::string(buf) + "]" + config_.description();
  description_hash_ = fnv1a(description_);
  empty_score_ = majority_class(*validation_).second;
  (void)metric_;
}

double ModelUtilityOracle::compute(const SubsetKey& subset, std::uint64_t eval_seed) const {
  if (subset.empty()) return empty_score_;
  trainings_.fetch_add(1, std::memory_order_relaxed);
  const auto model = train(config_, subset, *train_, deterministic() ? config_.seed : eval_seed);
  return accuracy(model, *validation_);
}

double ModelUtilityOracle::evaluate(const SubsetKey& subset, std::uint64_t eval_seed) const {
  if (subset.n() != n()) throw Error(ErrorCode::kLengthMismatch, "subset cohort mismatch");
  const std::uint64_t seed = deterministic() ? 0 : eval_seed;
  if (cache_) {
    if (auto hit = cache_->get(description_hash_, subset, seed)) return *hit;
  }
  const double score = compute(subset, seed);
  if (cache_) cache_->put(description_hash_, subset, seed, score);
  return score;
}

std::shared_ptr<ModelUtilityOracle> make_oracle(const TabularDataset& train,
                                                const TabularDataset& validation,
                                                const TrainerConfig& config, Metric metric,
                                                std::shared_ptr<EvalCache> cache) {
  return std::make_shared<ModelUtilityOracle>(std::make_shared<const TabularDataset>(train),
                                              std::make_shared<const TabularDataset>(validation),
                                              config, metric, std::move(cache));
}

}  // namespace dv
