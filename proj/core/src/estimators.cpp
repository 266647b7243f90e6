#include "dv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "dv/errors.hpp"
#include "dv/evalkit.hpp"
#include "dv/numeric.hpp"
#include "dv/parallel.hpp"

namespace dv {

namespace {

constexpr std::size_t kBlock = 256;

double checked_eval(const UtilityOracle& oracle, const SubsetKey& s, std::uint64_t eval_seed) {
  double u;
  try {
    u = oracle.evaluate(s, eval_seed);
  } catch (const OracleFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleFailure(s.to_string(), e.what());
  }
  if (!std::isfinite(u)) throw OracleFailure(s.to_string(), "non-finite score");
  if (oracle.bounded() && (u < 0.0 || u > 1.0)) {
    throw OracleFailure(s.to_string(), "score " + std::to_string(u) + " outside [0,1]");
  }
  return u;
}

// Subset drawn uniformly from 2^N via counter-based bits.
SubsetKey random_subset(std::size_t n, std::uint64_t stream) {
  SubsetKey s(n);
  const std::size_t words = (n + 63) / 64;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t bits = derive_seed(stream, w);
    const std::size_t lo = w * 64;
    const std::size_t hi = std::min(n, lo + 64);
    for (std::size_t i = lo; i < hi; ++i) {
      if ((bits >> (i - lo)) & 1U) s.insert(i);
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(SamplingScheme scheme) {
  switch (scheme) {
    case SamplingScheme::kUniformPowerset: return "uniform_powerset";
    case SamplingScheme::kPerPointUniform: return "per_point_uniform";
    case SamplingScheme::kPermutation: return "permutation";
  }
  return "unknown";
}

SamplingScheme parse_scheme(std::string_view text) {
  if (text == "uniform_powerset") return SamplingScheme::kUniformPowerset;
  if (text == "per_point_uniform") return SamplingScheme::kPerPointUniform;
  if (text == "permutation") return SamplingScheme::kPermutation;
  throw Error(ErrorCode::kParseError, "unknown sampling scheme '" + std::string(text) + "'");
}

std::vector<std::size_t> SampleLedger::inclusion_counts() const {
  std::vector<std::size_t> counts(n, 0);
  for (const auto& d : draws) {
    for (std::size_t i : d.subset.members()) ++counts[i];
  }
  return counts;
}

SubsetKey powerset_draw(std::size_t n, std::uint64_t sampler_seed, std::size_t idx) {
  return random_subset(n, derive_seed(sampler_seed, idx));
}

SampleLedger draw_ledger(const UtilityOracle& oracle, std::size_t m, std::uint64_t sampler_seed,
                         const LedgerOptions& options) {
  if (m == 0) throw Error(ErrorCode::kInvalidParam, "ledger needs m >= 1");
  SampleLedger ledger;
  ledger.n = oracle.n();
  ledger.sampler_seed = sampler_seed;
  ledger.scheme = SamplingScheme::kUniformPowerset;
  extend_ledger(ledger, oracle, m, options);
  return ledger;
}

void extend_ledger(SampleLedger& ledger, const UtilityOracle& oracle, std::size_t new_m,
                   const LedgerOptions& options) {
  if (ledger.scheme != SamplingScheme::kUniformPowerset) {
    throw Error(ErrorCode::kSchemeMismatch, "only uniform_powerset ledgers can be extended");
  }
  if (oracle.n() != ledger.n) throw Error(ErrorCode::kLengthMismatch, "oracle/ledger cohort mismatch");
  const std::size_t start = ledger.draws.size();
  if (new_m <= start) return;

  const bool det = oracle.deterministic();
  std::vector<LedgerDraw> fresh(new_m - start);
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    const std::size_t idx = start + k;
    fresh[k].subset = powerset_draw(ledger.n, ledger.sampler_seed, idx);
    fresh[k].eval_seed =
        det ? 0 : derive_seed(ledger.sampler_seed ^ fnv1a(fresh[k].subset.to_string()), idx);
  }

  if (det && options.reuse_deterministic) {
    std::unordered_map<SubsetKey, double, SubsetKeyHash> known;
    for (const auto& d : ledger.draws) known.emplace(d.subset, d.score);
    std::vector<std::size_t> todo;  // first occurrence of each unseen subset
    std::unordered_map<SubsetKey, std::size_t, SubsetKeyHash> slot;
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      if (known.contains(fresh[k].subset)) continue;
      if (slot.emplace(fresh[k].subset, todo.size()).second) todo.push_back(k);
    }
    std::vector<double> scores(todo.size());
    parallel_for(todo.size(), options.workers, [&](std::size_t t) {
      scores[t] = checked_eval(oracle, fresh[todo[t]].subset, 0);
    });
    for (auto& d : fresh) {
      if (auto it = known.find(d.subset); it != known.end()) {
        d.score = it->second;
      } else {
        d.score = scores[slot.at(d.subset)];
      }
    }
  } else {
    parallel_for(fresh.size(), options.workers, [&](std::size_t k) {
      fresh[k].score = checked_eval(oracle, fresh[k].subset, fresh[k].eval_seed);
    });
  }
  ledger.draws.insert(ledger.draws.end(), std::make_move_iterator(fresh.begin()),
                      std::make_move_iterator(fresh.end()));
}

ValueEstimate msr_estimate(const SampleLedger& ledger, std::optional<std::size_t> prefix) {
  if (ledger.scheme != SamplingScheme::kUniformPowerset) {
    throw Error(ErrorCode::kSchemeMismatch, "MSR requires a uniform_powerset ledger");
  }
  const std::size_t m = prefix ? std::min(*prefix, ledger.m()) : ledger.m();
  const std::size_t n = ledger.n;
  std::vector<CompensatedSum> in_sum(n);
  std::vector<CompensatedSum> out_sum(n);
  std::vector<std::size_t> in_count(n, 0);
  for (std::size_t t = 0; t < m; ++t) {
    const auto& d = ledger.draws[t];
    for (std::size_t i = 0; i < n; ++i) {
      if (d.subset.contains(i)) {
        in_sum[i] += d.score;
        ++in_count[i];
      } else {
        out_sum[i] += d.score;
      }
    }
  }
  ValueEstimate est;
  est.values.assign(n, 0.0);
  est.m = m;
  est.estimator = "msr";
  est.oracle_calls = m;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t out_count = m - in_count[i];
    if (in_count[i] == 0 || out_count == 0) {
      est.degenerate_points.push_back(i);
      continue;
    }
    est.values[i] = in_sum[i].value() / static_cast<double>(in_count[i]) -
                    out_sum[i].value() / static_cast<double>(out_count);
  }
  return est;
}

ValueEstimate simple_mc_estimate(const UtilityOracle& oracle, std::size_t m_per_point,
                                 std::uint64_t seed, std::size_t workers) {
  if (m_per_point == 0) throw Error(ErrorCode::kInvalidParam, "m_per_point must be >= 1");
  const std::size_t n = oracle.n();
  const bool det = oracle.deterministic();
  ValueEstimate est;
  est.values.assign(n, 0.0);
  est.m = m_per_point;
  est.estimator = "simple_mc";
  est.oracle_calls = 2 * n * m_per_point;
  parallel_for(n, workers, [&](std::size_t i) {
    CompensatedSum acc;
    for (std::size_t t = 0; t < m_per_point; ++t) {
      const std::uint64_t stream = derive_seed(seed, i, t);
      SubsetKey s = random_subset(n, stream);
      s.erase(i);
      const std::uint64_t e_with = det ? 0 : derive_seed(stream, 1);
      const std::uint64_t e_without = det ? 0 : derive_seed(stream, 2);
      acc += checked_eval(oracle, s.with(i), e_with) - checked_eval(oracle, s, e_without);
    }
    est.values[i] = acc.value() / static_cast<double>(m_per_point);
  });
  return est;
}

ValueEstimate permutation_shapley_estimate(const UtilityOracle& oracle, std::size_t permutations,
                                           std::uint64_t seed, std::size_t workers) {
  if (permutations == 0) throw Error(ErrorCode::kInvalidParam, "permutations must be >= 1");
  const std::size_t n = oracle.n();
  const bool det = oracle.deterministic();
  const std::size_t blocks = (permutations + kBlock - 1) / kBlock;
  // Fixed block partition keeps the reduction order independent of workers.
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(n, 0.0));
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::vector<CompensatedSum> acc(n);
    std::vector<std::size_t> order(n);
    const std::size_t end = std::min(permutations, (b + 1) * kBlock);
    for (std::size_t t = b * kBlock; t < end; ++t) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(seed, t));
      std::shuffle(order.begin(), order.end(), rng);
      SubsetKey pred(n);
      double prev = checked_eval(oracle, pred, det ? 0 : derive_seed(seed, t, n));
      for (std::size_t pos = 0; pos < n; ++pos) {
        pred.insert(order[pos]);
        const double cur = checked_eval(oracle, pred, det ? 0 : derive_seed(seed, t, pos));
        acc[order[pos]] += cur - prev;
        prev = cur;
      }
    }
    for (std::size_t i = 0; i < n; ++i) partial[b][i] = acc[i].value();
  });
  ValueEstimate est;
  est.values.assign(n, 0.0);
  est.m = permutations;
  est.estimator = "permutation_shapley";
  est.oracle_calls = permutations * (n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum acc;
    for (std::size_t b = 0; b < blocks; ++b) acc += partial[b][i];
    est.values[i] = acc.value() / static_cast<double>(permutations);
  }
  return est;
}

namespace {

void check_target(const ApproximationTarget& t, std::size_t n) {
  if (!(t.epsilon > 0)) throw Error(ErrorCode::kInvalidParam, "epsilon must be > 0");
  if (!(t.delta > 0 && t.delta < 1)) throw Error(ErrorCode::kInvalidParam, "delta must be in (0,1)");
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "cohort size must be positive");
}

}  // namespace

SamplePlan plan_msr_samples(const ApproximationTarget& target, std::size_t n) {
  check_target(target, n);
  const double nn = static_cast<double>(n);
  const double scale = target.norm == Norm::kL2 ? nn : 1.0;
  const double m = 32.0 * scale * std::log(5.0 * nn / target.delta) /
                   (target.epsilon * target.epsilon);
  const auto samples = static_cast<std::size_t>(std::ceil(m));
  return {samples, samples};
}

SamplePlan plan_simple_mc_samples(const ApproximationTarget& target, std::size_t n) {
  check_target(target, n);
  const double nn = static_cast<double>(n);
  const double scale = target.norm == Norm::kL2 ? nn : 1.0;
  const double m = scale * std::log(2.0 * nn / target.delta) /
                   (2.0 * target.epsilon * target.epsilon);
  const auto per_point = static_cast<std::size_t>(std::ceil(m));
  return {per_point, 2 * n * per_point};
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kMsr: return "msr";
    case EstimatorKind::kSimpleMc: return "simple_mc";
    case EstimatorKind::kPermutation: return "permutation_shapley";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view text) {
  if (text == "msr") return EstimatorKind::kMsr;
  if (text == "mc" || text == "simple_mc") return EstimatorKind::kSimpleMc;
  if (text == "permutation" || text == "permutation_shapley") return EstimatorKind::kPermutation;
  throw Error(ErrorCode::kParseError, "unknown estimator '" + std::string(text) + "'");
}

std::vector<TracePoint> convergence_trace(const EstimatorConfig& config,
                                          const UtilityOracle& oracle,
                                          std::span<const std::size_t> budgets,
                                          std::uint64_t seed) {
  std::vector<TracePoint> trace;
  if (budgets.empty()) return trace;
  for (std::size_t t = 1; t < budgets.size(); ++t) {
    if (budgets[t] <= budgets[t - 1]) {
      throw Error(ErrorCode::kInvalidParam, "budgets must be strictly increasing");
    }
  }
  const std::size_t n = oracle.n();
  SampleLedger ledger;
  ledger.n = n;
  ledger.sampler_seed = seed;
  for (std::size_t budget : budgets) {
    TracePoint point;
    point.budget = budget;
    switch (config.kind) {
      case EstimatorKind::kMsr:
        extend_ledger(ledger, oracle, budget, config.ledger);
        point.estimate = msr_estimate(ledger);
        break;
      case EstimatorKind::kSimpleMc: {
        const std::size_t per_point = budget / (2 * n);
        if (per_point == 0) throw Error(ErrorCode::kInvalidParam, "budget below 2n for simple MC");
        point.estimate = simple_mc_estimate(oracle, per_point, seed, config.ledger.workers);
        break;
      }
      case EstimatorKind::kPermutation: {
        const std::size_t perms = budget / n;
        if (perms == 0) throw Error(ErrorCode::kInvalidParam, "budget below n for permutations");
        point.estimate = permutation_shapley_estimate(oracle, perms, seed, config.ledger.workers);
        break;
      }
    }
    trace.push_back(std::move(point));
  }
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    trace[t].relative_spearman =
        spearman(trace[t].estimate.values, trace[t + 1].estimate.values).spearman;
  }
  return trace;
}

}  // namespace dv
