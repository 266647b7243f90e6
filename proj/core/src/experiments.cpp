#include "dv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dv/errors.hpp"
#include "dv/noise.hpp"
#include "dv/numeric.hpp"

namespace dv {

namespace {

std::vector<double> clean_values(const TableGame& table, const SemivalueSpec& spec) {
  return exact_semivalue(table.table(), spec).values;
}

void write_optional(std::ostream& out, const std::optional<double>& x) {
  if (x) out << *x;
}

}  // namespace

SyntheticGame synthetic_game(std::size_t n, std::uint64_t dataset_seed,
                             const TrainerConfig& config, bool tabulate_table,
                             std::shared_ptr<EvalCache> cache, std::size_t workers) {
  SyntheticGame game;
  game.data = synthetic_gaussian_dataset(n, dataset_seed);
  game.oracle = make_oracle(game.data.train, game.data.validation, config, Metric::kAccuracy,
                            std::move(cache));
  if (tabulate_table && config.deterministic()) {
    game.table = std::make_shared<TableGame>(n, tabulate(*game.oracle, 0, workers),
                                             "synthetic" + std::to_string(n));
  }
  return game;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kLengthMismatch, "vectors differ in length");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kLengthMismatch, "vectors differ in length");
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - b[i]) * (a[i] - b[i]));
  return std::sqrt(s.value());
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidParam, "slope needs two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw Error(ErrorCode::kInvalidParam, "log of non-positive value");
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr r;
  if (xs.empty()) return r;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  r.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum v;
    for (double x : xs) v.add((x - r.mean) * (x - r.mean));
    const double var = v.value() / static_cast<double>(xs.size() - 1);
    r.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return r;
}

std::vector<StabilityRow> gaussian_rank_stability(std::shared_ptr<const TableGame> clean,
                                                  std::span<const WeightRequest> methods,
                                                  std::span<const double> sigmas,
                                                  std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidParam, "trials must be >= 1");
  const std::size_t n = clean->n();
  std::vector<SemivalueSpec> specs;
  std::vector<std::vector<double>> reference;
  for (const auto& m : methods) {
    specs.push_back(make_weights(m, n));
    reference.push_back(clean_values(*clean, specs.back()));
  }
  std::vector<StabilityRow> rows;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    std::vector<std::vector<double>> rho(specs.size());
    for (std::size_t t = 0; t < trials; ++t) {
      const auto noisy =
          apply_noise(clean, NoiseModel::gaussian(sigmas[s], derive_seed(seed, s, t)));
      const auto table = tabulate(*noisy.oracle);
      for (std::size_t m = 0; m < specs.size(); ++m) {
        const auto values = exact_semivalue(table, specs[m]).values;
        rho[m].push_back(spearman(reference[m], values).spearman);
      }
    }
    for (std::size_t m = 0; m < specs.size(); ++m) {
      const auto ms = mean_stderr(rho[m]);
      rows.push_back({specs[m].label, "gaussian", sigmas[s], ms.mean, ms.stderr_, trials});
    }
  }
  return rows;
}

std::vector<StabilityRow> repeat_rank_stability(OraclePtr stochastic,
                                                std::span<const WeightRequest> methods,
                                                std::span<const std::size_t> ks,
                                                std::size_t reference_k, std::size_t trials,
                                                std::uint64_t seed, std::size_t workers) {
  if (trials == 0 || reference_k == 0) {
    throw Error(ErrorCode::kInvalidParam, "trials and reference_k must be >= 1");
  }
  const std::size_t n = stochastic->n();
  std::vector<SemivalueSpec> specs;
  for (const auto& m : methods) specs.push_back(make_weights(m, n));

  const auto ref_oracle = apply_noise(stochastic, NoiseModel::repeat_average(reference_k)).oracle;
  const auto ref_table = tabulate(*ref_oracle, derive_seed(seed, ~std::uint64_t{0}), workers);
  std::vector<std::vector<double>> reference;
  for (const auto& spec : specs) reference.push_back(exact_semivalue(ref_table, spec).values);

  std::vector<StabilityRow> rows;
  for (std::size_t k : ks) {
    const auto avg = apply_noise(stochastic, NoiseModel::repeat_average(k)).oracle;
    std::vector<std::vector<double>> rho(specs.size());
    for (std::size_t t = 0; t < trials; ++t) {
      const auto table = tabulate(*avg, derive_seed(seed, k, t), workers);
      for (std::size_t m = 0; m < specs.size(); ++m) {
        rho[m].push_back(spearman(reference[m], exact_semivalue(table, specs[m]).values).spearman);
      }
    }
    for (std::size_t m = 0; m < specs.size(); ++m) {
      const auto ms = mean_stderr(rho[m]);
      rows.push_back({specs[m].label, "repeat", static_cast<double>(k), ms.mean, ms.stderr_,
                      trials});
    }
  }
  return rows;
}

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows) {
  out << "method,noise,level,mean_spearman,stderr,trials\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.noise << ',' << r.level << ',' << r.mean_spearman << ','
        << r.stderr_spearman << ',' << r.trials << '\n';
  }
}

std::vector<TopkRow> topk_stability(std::shared_ptr<const TableGame> clean,
                                    std::span<const WeightRequest> methods, double sigma,
                                    std::size_t runs, double k_percent, std::uint64_t seed) {
  if (runs < 2) throw Error(ErrorCode::kInvalidParam, "top-k consistency needs >= 2 runs");
  const std::size_t n = clean->n();
  std::vector<SemivalueSpec> specs;
  for (const auto& m : methods) specs.push_back(make_weights(m, n));
  std::vector<std::vector<std::vector<double>>> values(specs.size());
  for (std::size_t r = 0; r < runs; ++r) {
    const auto table =
        tabulate(*apply_noise(clean, NoiseModel::gaussian(sigma, derive_seed(seed, r))).oracle);
    for (std::size_t m = 0; m < specs.size(); ++m) {
      values[m].push_back(exact_semivalue(table, specs[m]).values);
    }
  }
  std::vector<TopkRow> rows;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    rows.push_back({specs[m].label, sigma, k_percent, "top",
                    topk_consistency(values[m], k_percent, Side::kTop), runs});
    rows.push_back({specs[m].label, sigma, k_percent, "bottom",
                    topk_consistency(values[m], k_percent, Side::kBottom), runs});
  }
  return rows;
}

void write_topk_csv(std::ostream& out, std::span<const TopkRow> rows) {
  out << "method,sigma,k_percent,side,consistency,runs\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.sigma << ',' << r.k_percent << ',' << r.side << ','
        << r.consistency << ',' << r.runs << '\n';
  }
}

std::vector<ConvergenceRow> convergence_experiment(const UtilityOracle& oracle,
                                                   std::span<const double> reference,
                                                   std::span<const EstimatorKind> estimators,
                                                   std::span<const std::size_t> budgets,
                                                   std::size_t seeds, std::uint64_t base_seed,
                                                   std::size_t workers) {
  std::vector<ConvergenceRow> rows;
  for (EstimatorKind kind : estimators) {
    EstimatorConfig config;
    config.kind = kind;
    config.ledger.workers = workers;
    for (std::size_t s = 0; s < seeds; ++s) {
      const std::uint64_t seed = derive_seed(base_seed, s);
      for (auto& point : convergence_trace(config, oracle, budgets, seed)) {
        ConvergenceRow row;
        row.estimator = std::string(to_string(kind));
        row.seed = seed;
        row.budget = point.budget;
        row.oracle_calls = point.estimate.oracle_calls;
        if (!reference.empty()) {
          row.linf_error = linf_distance(point.estimate.values, reference);
          row.l2_error = l2_distance(point.estimate.values, reference);
        }
        row.relative_spearman = point.relative_spearman;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  out << "estimator,seed,budget,oracle_calls,linf_error,l2_error,relative_spearman\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.seed << ',' << r.budget << ',' << r.oracle_calls << ',';
    write_optional(out, r.linf_error);
    out << ',';
    write_optional(out, r.l2_error);
    out << ',';
    write_optional(out, r.relative_spearman);
    out << '\n';
  }
}

SlopeReport msr_error_slope(const UtilityOracle& oracle, std::span<const double> reference,
                            std::span<const std::size_t> ms, std::size_t seeds,
                            std::uint64_t base_seed) {
  if (ms.empty() || seeds == 0) throw Error(ErrorCode::kInvalidParam, "empty slope grid");
  SlopeReport report;
  report.budgets.assign(ms.begin(), ms.end());
  const std::size_t max_m = *std::max_element(ms.begin(), ms.end());
  std::vector<std::vector<double>> linf(ms.size()), l2(ms.size());
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto ledger = draw_ledger(oracle, max_m, derive_seed(base_seed, s));
    for (std::size_t b = 0; b < ms.size(); ++b) {
      const auto values = msr_estimate(ledger, ms[b]).values;
      linf[b].push_back(linf_distance(values, reference));
      l2[b].push_back(l2_distance(values, reference));
    }
  }
  std::vector<double> x;
  for (std::size_t b = 0; b < ms.size(); ++b) {
    report.mean_linf_error.push_back(mean_stderr(linf[b]).mean);
    report.mean_l2_error.push_back(mean_stderr(l2[b]).mean);
    x.push_back(static_cast<double>(ms[b]));
  }
  report.slope = loglog_slope(x, report.mean_linf_error);
  report.l2_slope = loglog_slope(x, report.mean_l2_error);
  return report;
}

PairedComparison msr_vs_mc(const UtilityOracle& oracle, std::span<const double> reference,
                           std::size_t budget, std::size_t seeds, std::uint64_t base_seed) {
  PairedComparison cmp;
  cmp.budget = budget;
  cmp.mc_per_point = budget / (2 * oracle.n());
  if (cmp.mc_per_point == 0) throw Error(ErrorCode::kInvalidParam, "budget below 2n");
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto ledger = draw_ledger(oracle, budget, derive_seed(base_seed, s, 0));
    const double msr = l2_distance(msr_estimate(ledger).values, reference);
    const double mc = l2_distance(
        simple_mc_estimate(oracle, cmp.mc_per_point, derive_seed(base_seed, s, 1)).values,
        reference);
    cmp.msr_l2.push_back(msr);
    cmp.mc_l2.push_back(mc);
    if (msr < mc) ++cmp.msr_wins;
  }
  return cmp;
}

PlateauReport noisy_plateau(std::shared_ptr<const TableGame> clean, double bound,
                            std::size_t target, std::span<const std::size_t> ms,
                            std::uint64_t seed) {
  PlateauReport report;
  report.bound = bound;
  report.target = target;
  report.ms.assign(ms.begin(), ms.end());
  const std::size_t n = clean->n();
  const auto reference = clean_values(*clean, make_weights(WeightRequest::banzhaf(), n));
  const auto noisy = apply_noise(clean, NoiseModel::bounded_per_subset(target, bound)).oracle;
  SampleLedger ledger{n, seed, SamplingScheme::kUniformPowerset, {}};
  std::vector<std::size_t> sorted(ms.begin(), ms.end());
  std::sort(sorted.begin(), sorted.end());
  extend_ledger(ledger, *noisy, sorted.back());
  for (std::size_t m : ms) {
    report.linf_error.push_back(linf_distance(msr_estimate(ledger, m).values, reference));
  }
  return report;
}

DetectionOutcome detection_experiment(const DetectionConfig& config,
                                      std::span<const std::string> methods,
                                      const TabularDataset* train,
                                      const TabularDataset* validation,
                                      std::shared_ptr<EvalCache> cache) {
  if ((train == nullptr) != (validation == nullptr)) {
    throw Error(ErrorCode::kInvalidParam, "train and validation must be given together");
  }
  DatasetPair data = train ? DatasetPair{*train, *validation}
                           : synthetic_gaussian_dataset(config.n_points, derive_seed(config.seed, 1));
  FlipResult flipped = flip_labels(data.train, config.flip_fraction, derive_seed(config.seed, 2));
  const auto oracle =
      make_oracle(flipped.dataset, data.validation, config.trainer, Metric::kAccuracy, cache);

  DetectionOutcome outcome;
  outcome.flipped = flipped.flipped;
  for (const auto& method : methods) {
    MethodDetection md;
    md.method = method;
    if (method == "banzhaf-msr") {
      LedgerOptions opts;
      opts.workers = config.workers;
      const auto ledger = draw_ledger(*oracle, config.msr_samples, derive_seed(config.seed, 3), opts);
      auto est = msr_estimate(ledger);
      md.values = std::move(est.values);
      md.oracle_calls = est.oracle_calls;
    } else if (method == "loo") {
      md.values = leave_one_out_values(*oracle, config.workers).values;
      md.oracle_calls = oracle->n() + 1;
    } else if (method == "shapley-permutation") {
      auto est = permutation_shapley_estimate(*oracle, config.permutations,
                                              derive_seed(config.seed, 4), config.workers);
      md.values = std::move(est.values);
      md.oracle_calls = est.oracle_calls;
    } else {
      throw Error(ErrorCode::kInvalidParam, "unknown detection method '" + method + "'");
    }
    md.report = mislabel_detect(md.values, outcome.flipped, config.percentile);
    if (config.weighted_trials > 0) {
      md.weighted = weighted_sample_training(md.values, flipped.dataset, data.validation,
                                             config.trainer, config.weighted_trials,
                                             derive_seed(config.seed, 5), config.workers);
    }
    outcome.methods.push_back(std::move(md));
  }
  if (config.weighted_trials > 0) {
    const std::vector<double> uniform(flipped.dataset.rows, 1.0);
    outcome.uniform_baseline =
        weighted_sample_training(uniform, flipped.dataset, data.validation, config.trainer,
                                 config.weighted_trials, derive_seed(config.seed, 5),
                                 config.workers);
  }
  return outcome;
}

}  // namespace dv
