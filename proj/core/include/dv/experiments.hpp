#pragma once

// Experiment drivers shared by dvtool and the acceptance suite. Each one is a
// pure function of its arguments and seeds.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dv/dataset.hpp"
#include "dv/estimators.hpp"
#include "dv/evalkit.hpp"
#include "dv/model_oracle.hpp"
#include "dv/oracle.hpp"
#include "dv/semivalue.hpp"
#include "dv/trainer.hpp"

namespace dv {

struct SyntheticGame {
  DatasetPair data;
  std::shared_ptr<ModelUtilityOracle> oracle;
  // Full utility table; only built for deterministic trainers.
  std::shared_ptr<TableGame> table;
};

// n-point synthetic logistic-regression game. With tabulate_table the 2^n
// utilities are evaluated once up front.
SyntheticGame synthetic_game(std::size_t n, std::uint64_t dataset_seed,
                             const TrainerConfig& config, bool tabulate_table = true,
                             std::shared_ptr<EvalCache> cache = nullptr, std::size_t workers = 1);

double linf_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);
// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStderr mean_stderr(std::span<const double> xs);

// --- rank stability -------------------------------------------------------

struct StabilityRow {
  std::string method;
  std::string noise;  // "gaussian" or "repeat"
  double level = 0.0;  // sigma, or k for repeat averaging
  double mean_spearman = 0.0;
  double stderr_spearman = 0.0;
  std::size_t trials = 0;
};

// Spearman between exact values on `clean` and exact values on the same
// table plus N(0, sigma^2) noise, per method, sigma and trial.
std::vector<StabilityRow> gaussian_rank_stability(std::shared_ptr<const TableGame> clean,
                                                  std::span<const WeightRequest> methods,
                                                  std::span<const double> sigmas,
                                                  std::size_t trials, std::uint64_t seed);

// Spearman between exact values of a reference_k-repeat average of a
// stochastic oracle and exact values of its k-repeat average.
std::vector<StabilityRow> repeat_rank_stability(OraclePtr stochastic,
                                                std::span<const WeightRequest> methods,
                                                std::span<const std::size_t> ks,
                                                std::size_t reference_k, std::size_t trials,
                                                std::uint64_t seed, std::size_t workers = 1);

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows);

struct TopkRow {
  std::string method;
  double sigma = 0.0;
  double k_percent = 0.0;
  std::string side;
  double consistency = 0.0;
  std::size_t runs = 0;
};

// Top/bottom-k consistency across `runs` independently noised copies.
std::vector<TopkRow> topk_stability(std::shared_ptr<const TableGame> clean,
                                    std::span<const WeightRequest> methods, double sigma,
                                    std::size_t runs, double k_percent, std::uint64_t seed);

void write_topk_csv(std::ostream& out, std::span<const TopkRow> rows);

// --- estimator convergence ------------------------------------------------

struct ConvergenceRow {
  std::string estimator;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t oracle_calls = 0;
  std::optional<double> linf_error;
  std::optional<double> l2_error;
  std::optional<double> relative_spearman;
};

// convergence_trace for each estimator and each of `seeds` derived seeds.
// Errors are reported against `reference` when it is non-empty.
std::vector<ConvergenceRow> convergence_experiment(const UtilityOracle& oracle,
                                                   std::span<const double> reference,
                                                   std::span<const EstimatorKind> estimators,
                                                   std::span<const std::size_t> budgets,
                                                   std::size_t seeds, std::uint64_t base_seed,
                                                   std::size_t workers = 1);

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);

struct SlopeReport {
  std::vector<std::size_t> budgets;
  std::vector<double> mean_linf_error;
  std::vector<double> mean_l2_error;
  double slope = 0.0;     // of the mean linf error
  double l2_slope = 0.0;  // of the mean l2 error
};

// MSR error against m (mean over seeds) and its log-log slopes.
SlopeReport msr_error_slope(const UtilityOracle& oracle, std::span<const double> reference,
                            std::span<const std::size_t> ms, std::size_t seeds,
                            std::uint64_t base_seed);

struct PairedComparison {
  std::size_t budget = 0;
  std::size_t mc_per_point = 0;
  std::vector<double> msr_l2;
  std::vector<double> mc_l2;
  std::size_t msr_wins = 0;
};

// MSR with m = budget against simple MC with budget / (2n) samples per point,
// both measured in l2 against `reference`, on paired seeds.
PairedComparison msr_vs_mc(const UtilityOracle& oracle, std::span<const double> reference,
                           std::size_t budget, std::size_t seeds, std::uint64_t base_seed);

struct PlateauReport {
  double bound = 0.0;
  std::size_t target = 0;
  std::vector<std::size_t> ms;
  std::vector<double> linf_error;  // vs exact Banzhaf of the clean oracle
};

// MSR on `clean` plus per-subset noise of magnitude `bound` pushed toward
// `target`, on one nested ledger.
PlateauReport noisy_plateau(std::shared_ptr<const TableGame> clean, double bound,
                            std::size_t target, std::span<const std::size_t> ms,
                            std::uint64_t seed);

// --- mislabel detection ---------------------------------------------------

struct DetectionConfig {
  std::size_t n_points = 200;
  double flip_fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t msr_samples = 50000;
  std::size_t permutations = 50;
  double percentile = 10.0;
  std::size_t weighted_trials = 0;  // 0 skips weighted training
  TrainerConfig trainer;
  std::size_t workers = 1;
};

struct MethodDetection {
  std::string method;
  std::vector<double> values;
  DetectionReport report;
  std::optional<WeightedTrainingReport> weighted;
  std::size_t oracle_calls = 0;
};

struct DetectionOutcome {
  std::vector<std::size_t> flipped;
  std::vector<MethodDetection> methods;
  std::optional<WeightedTrainingReport> uniform_baseline;
};

// Methods: "banzhaf-msr", "loo", "shapley-permutation".
DetectionOutcome detection_experiment(const DetectionConfig& config,
                                      std::span<const std::string> methods,
                                      const TabularDataset* train = nullptr,
                                      const TabularDataset* validation = nullptr,
                                      std::shared_ptr<EvalCache> cache = nullptr);

}  // namespace dv
