#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dv/oracle.hpp"
#include "dv/subset.hpp"

namespace dv {

inline constexpr std::size_t kDefaultEnumerationCap = 20;

// A semivalue over a cohort of size n, given by its weight function
// w(1..n) with sum_k C(n-1,k-1) w(k) = n.
struct SemivalueSpec {
  std::size_t n = 0;
  std::vector<double> weights;  // weights[k-1] holds w(k)
  std::string label;

  double w(std::size_t k) const { return weights.at(k - 1); }
};

enum class WeightKind { kLoo, kShapley, kBanzhaf, kBeta, kCustom };

struct WeightRequest {
  WeightKind kind = WeightKind::kBanzhaf;
  double alpha = 1.0;  // beta only
  double beta = 1.0;   // beta only
  std::vector<double> custom;

  static WeightRequest loo() { return {WeightKind::kLoo, 1.0, 1.0, {}}; }
  static WeightRequest shapley() { return {WeightKind::kShapley, 1.0, 1.0, {}}; }
  static WeightRequest banzhaf() { return {WeightKind::kBanzhaf, 1.0, 1.0, {}}; }
  static WeightRequest beta_shapley(double a, double b) { return {WeightKind::kBeta, a, b, {}}; }
  static WeightRequest from_vector(std::vector<double> w) {
    return {WeightKind::kCustom, 1.0, 1.0, std::move(w)};
  }
  // Accepts "loo", "shapley", "banzhaf", "beta(a,b)".
  static WeightRequest parse(std::string_view text);
};

SemivalueSpec make_weights(const WeightRequest& request, std::size_t n);

// |sum_k C(n-1,k-1) w(k) - n| / n, summed in log space.
double normalization_residual(const SemivalueSpec& spec);

struct ValueVector {
  std::vector<double> values;
  std::string spec_label;
  bool exact = true;
};

struct DistinguishabilityProfile {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<double> deltas;  // deltas[k-1] = Delta^(k)_{i,j}, k = 1..n-1

  // Largest tau for which (i, j) is tau-distinguishable.
  double tau() const;
};

struct ExactOptions {
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  std::size_t workers = 1;
  std::uint64_t eval_seed = 0;  // draw base for stochastic oracles
};

// Direct evaluation of the semivalue double sum. The oracle is queried once
// per subset (2^n calls).
ValueVector exact_semivalue(const UtilityOracle& oracle, const SemivalueSpec& spec,
                            const ExactOptions& options = {});
// Same, over a utility vector already indexed by subset bitmask.
ValueVector exact_semivalue(std::span<const double> table, const SemivalueSpec& spec);

// LOO values U(N) - U(N \ i) with n + 1 queries; no enumeration cap.
ValueVector leave_one_out_values(const UtilityOracle& oracle, std::size_t workers = 1,
                                 std::uint64_t eval_seed = 0);

double marginal_contribution(const UtilityOracle& oracle, std::size_t i, const SubsetKey& s,
                             std::uint64_t eval_seed = 0);

DistinguishabilityProfile distinguishability_profile(const UtilityOracle& oracle, std::size_t i,
                                                     std::size_t j,
                                                     const ExactOptions& options = {});
DistinguishabilityProfile distinguishability_profile(std::span<const double> table, std::size_t n,
                                                     std::size_t i, std::size_t j);

// D_{i,j}(U; w) = sum_k (w(k)+w(k+1)) C(n-2,k-1) Delta^(k)_{i,j} = n (phi_i - phi_j).
double pairwise_difference(const UtilityOracle& oracle, const SemivalueSpec& spec, std::size_t i,
                           std::size_t j, const ExactOptions& options = {});
double pairwise_difference(std::span<const double> table, const SemivalueSpec& spec,
                           std::size_t i, std::size_t j);

}  // namespace dv
