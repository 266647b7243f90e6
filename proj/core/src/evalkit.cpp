#include "dv/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"
#include "dv/parallel.hpp"

namespace dv {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double r = 0.5 * static_cast<double>(start + 1 + end);  // mean of start+1..end
    for (std::size_t t = start; t < end; ++t) ranks[order[t]] = r;
    start = end;
  }
  return ranks;
}

RankReport spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kLengthMismatch, "spearman inputs differ in length");
  if (a.size() < 2) throw Error(ErrorCode::kInvalidParam, "spearman needs at least 2 points");
  RankReport report;
  report.n = a.size();
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = 0.5 * static_cast<double>(a.size() + 1);
  CompensatedSum sab;
  CompensatedSum saa;
  CompensatedSum sbb;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double da = ra[t] - mean;
    const double db = rb[t] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa.value() == 0.0 || sbb.value() == 0.0) {
    report.degenerate = true;
    report.spearman = 0.0;
    return report;
  }
  report.spearman = std::clamp(sab.value() / std::sqrt(saa.value() * sbb.value()), -1.0, 1.0);
  return report;
}

double topk_consistency(const std::vector<std::vector<double>>& runs, double k_percent,
                        Side side) {
  if (runs.size() < 2) throw Error(ErrorCode::kInvalidParam, "need at least two runs");
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw Error(ErrorCode::kInvalidParam, "k_percent must be in (0, 100]");
  }
  const std::size_t n = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != n) throw Error(ErrorCode::kLengthMismatch, "runs differ in length");
  }
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "empty runs");
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(k_percent * static_cast<double>(n) / 100.0 - 1e-9)));

  std::vector<int> hits(n, 0);
  std::vector<std::size_t> order(n);
  for (const auto& run : runs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return side == Side::kTop ? run[a] > run[b] : run[a] < run[b];
    });
    for (std::size_t t = 0; t < k; ++t) ++hits[order[t]];
  }
  const auto everywhere =
      std::count(hits.begin(), hits.end(), static_cast<int>(runs.size()));
  return static_cast<double>(everywhere) / static_cast<double>(k);
}

DetectionReport mislabel_detect(std::span<const double> values,
                                std::span<const std::size_t> ground_truth, double percentile) {
  if (values.empty()) throw Error(ErrorCode::kInvalidParam, "no values");
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw Error(ErrorCode::kInvalidParam, "percentile must be in (0, 100)");
  }
  DetectionReport report;
  report.threshold_percentile = percentile;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(values.size()) - 1e-9)));
  report.threshold_value = sorted[rank - 1];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= report.threshold_value) report.predicted.push_back(i);
  }

  std::vector<bool> truth(values.size(), false);
  for (std::size_t g : ground_truth) {
    if (g >= values.size()) throw Error(ErrorCode::kInvalidParam, "ground-truth index out of range");
    truth[g] = true;
  }
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  std::size_t tp = 0;
  for (std::size_t p : report.predicted) tp += truth[p] ? 1 : 0;
  if (positives == 0 || report.predicted.empty()) {
    report.undefined = true;
    return report;
  }
  report.precision = static_cast<double>(tp) / static_cast<double>(report.predicted.size());
  report.recall = static_cast<double>(tp) / static_cast<double>(positives);
  const double pr = report.precision + report.recall;
  report.f1 = pr > 0 ? 2.0 * report.precision * report.recall / pr : 0.0;
  return report;
}

WeightedTrainingReport weighted_sample_training(std::span<const double> values,
                                                const TabularDataset& train,
                                                const TabularDataset& validation,
                                                const TrainerConfig& config, std::size_t trials,
                                                std::uint64_t seed, std::size_t workers) {
  if (values.size() != train.rows) {
    throw Error(ErrorCode::kLengthMismatch, "one value per training row required");
  }
  if (trials == 0) throw Error(ErrorCode::kInvalidParam, "trials must be >= 1");
  WeightedTrainingReport report;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  report.weights.assign(values.size(), 1.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < values.size(); ++i) report.weights[i] = (values[i] - lo) / (hi - lo);
  } else {
    report.degenerate_weights = true;
  }

  const SubsetKey everyone = SubsetKey::full(train.rows);
  report.accuracies.assign(trials, 0.0);
  parallel_for(trials, workers, [&](std::size_t t) {
    const auto model = dv::train(config, everyone, train, derive_seed(seed, t), report.weights);
    report.accuracies[t] = accuracy(model, validation);
  });
  CompensatedSum sum;
  for (double a : report.accuracies) sum += a;
  report.mean_accuracy = sum.value() / static_cast<double>(trials);
  if (trials > 1) {
    CompensatedSum ss;
    for (double a : report.accuracies) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    report.stderr_accuracy =
        std::sqrt(ss.value() / static_cast<double>(trials - 1)) / std::sqrt(static_cast<double>(trials));
  }
  return report;
}

}  // namespace dv
