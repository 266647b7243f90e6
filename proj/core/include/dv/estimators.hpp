#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dv/oracle.hpp"
#include "dv/subset.hpp"

namespace dv {

enum class SamplingScheme { kUniformPowerset, kPerPointUniform, kPermutation };

std::string_view to_string(SamplingScheme scheme);
SamplingScheme parse_scheme(std::string_view text);

struct LedgerDraw {
  SubsetKey subset;
  double score = 0.0;
  std::uint64_t eval_seed = 0;
};

// The persisted record of sampled subsets and their utility scores. For the
// uniform_powerset scheme the i-th subset is a pure function of
// (sampler_seed, i), so ledgers of different lengths with the same seed are
// prefixes of one another.
struct SampleLedger {
  std::size_t n = 0;
  std::uint64_t sampler_seed = 0;
  SamplingScheme scheme = SamplingScheme::kUniformPowerset;
  std::vector<LedgerDraw> draws;

  std::size_t m() const noexcept { return draws.size(); }
  // |S_{contains i}| for every i.
  std::vector<std::size_t> inclusion_counts() const;
};

struct LedgerOptions {
  std::size_t workers = 1;
  // Serve repeated subsets of a deterministic oracle from the first draw.
  bool reuse_deterministic = true;
};

// The idx-th subset of the uniform power-set stream: each point is included
// independently with probability 1/2.
SubsetKey powerset_draw(std::size_t n, std::uint64_t sampler_seed, std::size_t idx);

SampleLedger draw_ledger(const UtilityOracle& oracle, std::size_t m, std::uint64_t sampler_seed,
                         const LedgerOptions& options = {});
// Appends draws until the ledger holds new_m draws (no-op if already there).
void extend_ledger(SampleLedger& ledger, const UtilityOracle& oracle, std::size_t new_m,
                   const LedgerOptions& options = {});

void write_ledger_jsonl(std::ostream& out, const SampleLedger& ledger);
SampleLedger read_ledger_jsonl(std::istream& in);

struct ValueEstimate {
  std::vector<double> values;
  std::size_t m = 0;  // samples used (draws, per-point samples or permutations)
  std::string estimator;
  std::vector<std::size_t> degenerate_points;
  std::size_t oracle_calls = 0;
};

// Maximum-sample-reuse Banzhaf estimate from the first `prefix` draws
// (all draws when prefix is empty).
ValueEstimate msr_estimate(const SampleLedger& ledger,
                           std::optional<std::size_t> prefix = std::nullopt);

ValueEstimate simple_mc_estimate(const UtilityOracle& oracle, std::size_t m_per_point,
                                 std::uint64_t seed, std::size_t workers = 1);

ValueEstimate permutation_shapley_estimate(const UtilityOracle& oracle, std::size_t permutations,
                                           std::uint64_t seed, std::size_t workers = 1);

enum class Norm { kL2, kLinf };

struct ApproximationTarget {
  double epsilon = 0.1;
  double delta = 0.05;
  Norm norm = Norm::kLinf;
};

struct SamplePlan {
  std::size_t samples = 0;       // m for MSR, m_per_point for simple MC
  std::size_t oracle_calls = 0;  // total utility queries
};

// Sample counts from the Hoeffding-style tail bounds behind the MSR and
// simple-MC guarantees, constants included.
SamplePlan plan_msr_samples(const ApproximationTarget& target, std::size_t n);
SamplePlan plan_simple_mc_samples(const ApproximationTarget& target, std::size_t n);

enum class EstimatorKind { kMsr, kSimpleMc, kPermutation };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view text);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kMsr;
  LedgerOptions ledger;
};

struct TracePoint {
  std::size_t budget = 0;  // utility calls
  ValueEstimate estimate;
  std::optional<double> relative_spearman;  // vs the next budget; empty on the last
};

// Estimates at each budget with nested samples. Budgets are utility calls:
// MSR uses m = budget, simple MC m_per_point = budget / (2n), permutation
// sampling budget / n permutations.
std::vector<TracePoint> convergence_trace(const EstimatorConfig& config,
                                          const UtilityOracle& oracle,
                                          std::span<const std::size_t> budgets,
                                          std::uint64_t seed);

}  // namespace dv
