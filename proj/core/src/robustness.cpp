#include "dv/robustness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

namespace {

void check_pair(std::size_t n, std::size_t i, std::size_t j) {
  if (i == j) throw Error(ErrorCode::kSamePoint, "i and j must differ");
  if (i >= n || j >= n) throw Error(ErrorCode::kInvalidParam, "point index outside cohort");
}

// log(C(n-2,k-1)) + log|w(k)+w(k+1)|, or -inf when the pair weight is zero.
double log_pair_term(const SemivalueSpec& spec, int k) {
  const int n = static_cast<int>(spec.n);
  const double f = spec.w(k) + spec.w(k + 1);
  if (f == 0.0) return -std::numeric_limits<double>::infinity();
  return log_binomial(n - 2, k - 1) + std::log(std::abs(f));
}

}  // namespace

SafetyMarginReport safety_margin(const SemivalueSpec& spec, double tau) {
  if (!(tau > 0) || !std::isfinite(tau)) throw Error(ErrorCode::kInvalidParam, "InvalidTau: tau must be > 0");
  if (spec.n < 2) throw Error(ErrorCode::kInvalidParam, "safety margin needs n >= 2");
  const int n = static_cast<int>(spec.n);

  SafetyMarginReport report;
  report.spec_label = spec.label;
  report.n = spec.n;
  report.tau = tau;
  report.per_term.resize(spec.n - 1);

  // Factor out the largest term so neither sum overflows.
  double peak = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n - 1; ++k) peak = std::max(peak, log_pair_term(spec, k));
  if (!std::isfinite(peak)) throw Error(ErrorCode::kInvalidParam, "all pair weights are zero");

  CompensatedSum linear;
  CompensatedSum square;
  for (int k = 1; k <= n - 1; ++k) {
    const double f = spec.w(k) + spec.w(k + 1);
    report.per_term[k - 1] = binomial(n - 2, k - 1) * f;
    const double lt = log_pair_term(spec, k);
    if (!std::isfinite(lt)) continue;
    const double sign = f < 0 ? -1.0 : 1.0;
    linear += sign * std::exp(lt - peak);
    // C f^2 = (C f)^2 / C
    square += std::exp(2.0 * (lt - peak) - log_binomial(n - 2, k - 1));
  }
  report.margin = tau * std::abs(linear.value()) / std::sqrt(square.value());
  report.l2_flip_margin = report.margin / std::sqrt(2.0);
  return report;
}

std::shared_ptr<TableGame> worst_case_utility(std::size_t n, std::size_t i, std::size_t j,
                                              double tau, std::size_t cap) {
  check_pair(n, i, j);
  if (n > cap) throw Error(ErrorCode::kCohortTooLarge, "n exceeds enumeration cap");
  if (!(tau >= 0)) throw Error(ErrorCode::kInvalidParam, "tau must be >= 0");
  if (tau > 1.0) throw Error(ErrorCode::kTauTooLarge, "tau > 1 leaves [0,1]");
  const std::uint64_t bi = std::uint64_t{1} << i;
  const std::uint64_t bj = std::uint64_t{1} << j;
  std::vector<double> table(std::size_t{1} << n, 0.5);
  for (std::uint64_t mask = 0; mask < table.size(); ++mask) {
    const bool has_i = mask & bi;
    const bool has_j = mask & bj;
    if (has_i && !has_j) table[mask] = 0.5 + tau / 2;
    if (has_j && !has_i) table[mask] = 0.5 - tau / 2;
  }
  return std::make_shared<TableGame>(n, std::move(table), "worst_case");
}

PerturbationResult adversarial_perturbation(const UtilityOracle& oracle, const SemivalueSpec& spec,
                                            std::size_t i, std::size_t j, double magnitude,
                                            std::size_t cap) {
  check_pair(oracle.n(), i, j);
  if (oracle.n() > cap) throw Error(ErrorCode::kCohortTooLarge, "n exceeds enumeration cap");
  const auto table = tabulate(oracle);
  return adversarial_perturbation(table, spec, i, j, magnitude);
}

PerturbationResult adversarial_perturbation(std::span<const double> table,
                                            const SemivalueSpec& spec, std::size_t i,
                                            std::size_t j, double magnitude) {
  const std::size_t n = spec.n;
  check_pair(n, i, j);
  if (!(magnitude >= 0)) throw Error(ErrorCode::kInvalidParam, "magnitude must be >= 0");
  if (table.size() != (std::size_t{1} << n)) {
    throw Error(ErrorCode::kLengthMismatch, "utility table must have 2^n entries");
  }
  const std::uint64_t bi = std::uint64_t{1} << i;
  const std::uint64_t bj = std::uint64_t{1} << j;

  // a[S u i] = w(|S|+1) + w(|S|+2), a[S u j] = -a[S u i], S in N \ {i,j}.
  std::vector<double> a(table.size(), 0.0);
  CompensatedSum sq;
  for (std::uint64_t mask = 0; mask < table.size(); ++mask) {
    if (mask & (bi | bj)) continue;
    const auto s = static_cast<std::size_t>(std::popcount(mask));
    const double f = spec.w(s + 1) + spec.w(s + 2);
    a[mask | bi] = f;
    a[mask | bj] = -f;
    sq += 2.0 * f * f;
  }
  PerturbationResult out;
  out.direction_norm = std::sqrt(sq.value());
  out.original_difference = pairwise_difference(table, spec, i, j);
  const double scale = std::max(1.0, out.direction_norm);
  if (std::abs(out.original_difference) <= 1e-14 * scale) {
    throw Error(ErrorCode::kDegeneratePair, "D_{i,j}(U) = 0; perturbation direction undefined");
  }
  out.flip_threshold = std::abs(out.original_difference) / out.direction_norm;

  const double sign = out.original_difference > 0 ? 1.0 : -1.0;
  const double step = -sign * magnitude / out.direction_norm;
  std::vector<double> perturbed(table.begin(), table.end());
  for (std::size_t c = 0; c < perturbed.size(); ++c) {
    perturbed[c] += step * a[c];
    if (perturbed[c] < 0.0 || perturbed[c] > 1.0) out.out_of_range = true;
  }
  out.perturbed_difference = pairwise_difference(perturbed, spec, i, j);
  out.oracle = std::make_shared<TableGame>(n, std::move(perturbed), "perturbed");
  return out;
}

std::vector<double> SemivalueMatrix::apply(std::span<const double> utility) const {
  if (utility.size() != cols) throw Error(ErrorCode::kLengthMismatch, "utility length != 2^n");
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    CompensatedSum acc;
    for (std::size_t c = 0; c < cols; ++c) acc += at(r, c) * utility[c];
    out[r] = acc.value();
  }
  return out;
}

SemivalueMatrix semivalue_matrix(const SemivalueSpec& spec, std::size_t cap) {
  const std::size_t n = spec.n;
  if (n > cap) {
    throw Error(ErrorCode::kCohortTooLarge,
                "n=" + std::to_string(n) + " exceeds numeric cap " + std::to_string(cap));
  }
  SemivalueMatrix m;
  m.rows = n;
  m.cols = std::size_t{1} << n;
  m.data.assign(m.rows * m.cols, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < m.cols; ++c) {
    const auto size = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(c)));
    for (std::size_t r = 0; r < n; ++r) {
      const bool in = (c >> r) & 1U;
      m.data[r * m.cols + c] = in ? spec.w(size) * inv_n : -spec.w(size + 1) * inv_n;
    }
  }
  return m;
}

LipschitzReport lipschitz_constant(const SemivalueSpec& spec, bool numeric, std::size_t cap) {
  const int n = static_cast<int>(spec.n);
  if (n < 2) throw Error(ErrorCode::kInvalidParam, "Lipschitz constant needs n >= 2");
  LipschitzReport report;
  report.spec_label = spec.label;
  report.n = spec.n;

  const double log_n2 = 2.0 * std::log(static_cast<double>(n));
  CompensatedSum d1;
  for (int k = 1; k <= n; ++k) {
    const double w = spec.w(k);
    if (w == 0.0) continue;
    d1 += std::exp(std::log(2.0) + log_binomial(n - 1, k - 1) + 2.0 * std::log(std::abs(w)) - log_n2);
  }
  CompensatedSum d2;
  for (int k = 0; k <= n - 2; ++k) {
    const double diff = spec.w(k + 2) - spec.w(k + 1);
    if (diff == 0.0) continue;
    d2 += std::exp(log_binomial(n - 2, k) + 2.0 * std::log(std::abs(diff)) - log_n2);
  }
  report.d1 = d1.value();
  report.d2 = d2.value();
  report.closed_form = std::sqrt(report.d1 + (n - 1) * report.d2);

  if (numeric) {
    const auto m = semivalue_matrix(spec, cap);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(
        m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat.transpose());
    report.numeric_operator_norm = svd.singularValues()(0);
  }
  return report;
}

FlipTestResult flip_test(const SemivalueSpec& spec, double tau, std::size_t i, std::size_t j,
                         double rel_tol) {
  if (!(tau > 0)) throw Error(ErrorCode::kInvalidParam, "InvalidTau: tau must be > 0");
  const auto game = worst_case_utility(spec.n, i, j, tau);
  const auto& table = game->table();

  FlipTestResult result;
  result.spec_label = spec.label;
  result.n = spec.n;
  result.tau = tau;
  result.i = i;
  result.j = j;
  result.closed_form_margin = safety_margin(spec, tau).margin;

  const double d0 = pairwise_difference(table, spec, i, j);
  auto flipped = [&](double magnitude, double* threshold) {
    const auto p = adversarial_perturbation(table, spec, i, j, magnitude);
    if (threshold != nullptr) *threshold = p.flip_threshold;
    return p.perturbed_difference * d0 <= 0.0;
  };

  double lo = 0.0;
  double hi = tau;
  flipped(0.0, &result.l2_threshold);
  while (!flipped(hi, nullptr)) {
    result.trace.push_back({lo, hi, hi, false});
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorCode::kNumericalDivergence, "no flip found");
  }
  result.trace.push_back({lo, hi, hi, true});
  while ((hi - lo) > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    const bool f = flipped(mid, nullptr);
    result.trace.push_back({lo, hi, mid, f});
    (f ? hi : lo) = mid;
  }
  result.empirical_threshold = hi;
  return result;
}

}  // namespace dv
