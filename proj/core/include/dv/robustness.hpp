#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dv/oracle.hpp"
#include "dv/semivalue.hpp"

namespace dv {

inline constexpr std::size_t kDefaultNumericCap = 12;

struct SafetyMarginReport {
  std::string spec_label;
  std::size_t n = 0;
  double tau = 0.0;
  // tau * sum_k c_k / sqrt(sum_k c_k (w(k)+w(k+1))), c_k = C(n-2,k-1)(w(k)+w(k+1)).
  double margin = 0.0;
  // Smallest l2 norm over all 2^n utility entries that reverses a
  // tau-distinguishable pair: margin / sqrt(2).
  double l2_flip_margin = 0.0;
  std::vector<double> per_term;  // c_k for k = 1..n-1
};

SafetyMarginReport safety_margin(const SemivalueSpec& spec, double tau);

// U(S u i) = 0.5 + tau/2 and U(S u j) = 0.5 - tau/2 for S in N \ {i, j};
// every other subset scores 0.5. Its distinguishability profile is tau at
// every size.
std::shared_ptr<TableGame> worst_case_utility(std::size_t n, std::size_t i, std::size_t j,
                                              double tau,
                                              std::size_t cap = kDefaultEnumerationCap);

struct PerturbationResult {
  std::shared_ptr<TableGame> oracle;
  double original_difference = 0.0;   // D_{i,j}(U)
  double perturbed_difference = 0.0;  // D_{i,j}(U + x)
  double direction_norm = 0.0;        // ||a||_2
  double flip_threshold = 0.0;        // |D_{i,j}(U)| / ||a||_2
  bool out_of_range = false;          // some perturbed score left [0,1]
};

// U + x with ||x||_2 = magnitude along -sign(D) a, where D_{i,j}(U) = a^T U.
PerturbationResult adversarial_perturbation(const UtilityOracle& oracle, const SemivalueSpec& spec,
                                            std::size_t i, std::size_t j, double magnitude,
                                            std::size_t cap = kDefaultEnumerationCap);
PerturbationResult adversarial_perturbation(std::span<const double> table,
                                            const SemivalueSpec& spec, std::size_t i,
                                            std::size_t j, double magnitude);

// Row-major n x 2^n matrix S_n with phi(U) = S_n U; column c is the subset
// with bitmask c.
struct SemivalueMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::vector<double> apply(std::span<const double> utility) const;
};

SemivalueMatrix semivalue_matrix(const SemivalueSpec& spec,
                                 std::size_t cap = kDefaultNumericCap);

struct LipschitzReport {
  std::string spec_label;
  std::size_t n = 0;
  double d1 = 0.0;
  double d2 = 0.0;
  double closed_form = 0.0;  // sqrt(d1 + (n-1) d2)
  std::optional<double> numeric_operator_norm;
};

LipschitzReport lipschitz_constant(const SemivalueSpec& spec, bool numeric,
                                   std::size_t cap = kDefaultNumericCap);

struct FlipTestStep {
  double lo = 0.0;
  double hi = 0.0;
  double magnitude = 0.0;
  bool flipped = false;
};

struct FlipTestResult {
  std::string spec_label;
  std::size_t n = 0;
  double tau = 0.0;
  std::size_t i = 0;
  std::size_t j = 1;
  double empirical_threshold = 0.0;  // bisection result
  double closed_form_margin = 0.0;   // safety_margin(spec, tau).margin
  double l2_threshold = 0.0;         // |D| / ||a||
  std::vector<FlipTestStep> trace;

  double ratio_to_closed_form() const { return empirical_threshold / closed_form_margin; }
};

// Bisects the smallest adversarial_perturbation magnitude that reverses the
// order of (i, j) on worst_case_utility(n, i, j, tau).
FlipTestResult flip_test(const SemivalueSpec& spec, double tau, std::size_t i = 0,
                         std::size_t j = 1, double rel_tol = 1e-7);

}  // namespace dv
