#include "dv/semivalue.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"
#include "dv/parallel.hpp"

namespace dv {

namespace {

constexpr double kNormalizationTol = 1e-9;

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

std::string short_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap) {
    throw Error(ErrorCode::kCohortTooLarge,
                "n=" + std::to_string(n) + " exceeds enumeration cap " + std::to_string(cap));
  }
}

void check_pair(std::size_t n, std::size_t i, std::size_t j) {
  if (i == j) throw Error(ErrorCode::kSamePoint, "i and j must differ");
  if (i >= n || j >= n) throw Error(ErrorCode::kInvalidParam, "point index outside cohort");
}

std::vector<double> table_for(const UtilityOracle& oracle, const ExactOptions& options) {
  check_cap(oracle.n(), options.enumeration_cap);
  return tabulate(oracle, options.eval_seed, options.workers);
}

double parse_double(std::string_view s) {
  // from_chars for double is available in libstdc++ 11.
  double v = 0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParseError, "bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

WeightRequest WeightRequest::parse(std::string_view text) {
  if (text == "loo") return loo();
  if (text == "shapley") return shapley();
  if (text == "banzhaf") return banzhaf();
  if (text.starts_with("beta(") && text.ends_with(")")) {
    const std::string_view body = text.substr(5, text.size() - 6);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::kParseError, "expected beta(alpha,beta)");
    }
    return beta_shapley(parse_double(body.substr(0, comma)), parse_double(body.substr(comma + 1)));
  }
  throw Error(ErrorCode::kParseError, "unknown semivalue '" + std::string(text) + "'");
}

SemivalueSpec make_weights(const WeightRequest& request, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "cohort size must be positive");
  const int ni = static_cast<int>(n);
  SemivalueSpec spec;
  spec.n = n;
  spec.weights.assign(n, 0.0);

  switch (request.kind) {
    case WeightKind::kLoo:
      spec.weights[n - 1] = static_cast<double>(n);
      spec.label = "loo";
      break;
    case WeightKind::kShapley:
      for (int k = 1; k <= ni; ++k) {
        spec.weights[k - 1] = ni <= 30 ? 1.0 / binomial(ni - 1, k - 1)
                                       : std::exp(-log_binomial(ni - 1, k - 1));
      }
      spec.label = "shapley";
      break;
    case WeightKind::kBanzhaf: {
      const double w = std::exp(std::log(static_cast<double>(n)) - (ni - 1) * std::log(2.0));
      // ldexp keeps powers of two exact where representable.
      const double exact = std::ldexp(static_cast<double>(n), -(ni - 1));
      spec.weights.assign(n, exact > 0 ? exact : w);
      spec.label = "banzhaf";
      break;
    }
    case WeightKind::kBeta: {
      const double a = request.alpha;
      const double b = request.beta;
      if (!(a > 0) || !(b > 0)) {
        throw Error(ErrorCode::kInvalidParam, "beta semivalue requires alpha > 0 and beta > 0");
      }
      std::vector<double> log_raw(n);
      double peak = -std::numeric_limits<double>::infinity();
      for (int k = 1; k <= ni; ++k) {
        log_raw[k - 1] = log_beta(k + b - 1.0, ni - k + a) - log_beta(a, b);
        peak = std::max(peak, log_binomial(ni - 1, k - 1) + log_raw[k - 1]);
      }
      CompensatedSum total;
      for (int k = 1; k <= ni; ++k) {
        total += std::exp(log_binomial(ni - 1, k - 1) + log_raw[k - 1] - peak);
      }
      const double log_scale = std::log(static_cast<double>(n)) - peak - std::log(total.value());
      for (std::size_t k = 0; k < n; ++k) spec.weights[k] = std::exp(log_raw[k] + log_scale);
      spec.label = "beta(" + short_double(a) + "," + short_double(b) + ")";
      break;
    }
    case WeightKind::kCustom:
      if (request.custom.size() != n) {
        throw Error(ErrorCode::kLengthMismatch, "custom weights need exactly n entries");
      }
      for (double x : request.custom) {
        if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidParam, "non-finite weight");
      }
      spec.weights = request.custom;
      spec.label = "custom";
      break;
  }

  const double residual = normalization_residual(spec);
  if (!(residual <= kNormalizationTol)) {
    throw Error(ErrorCode::kNormalizationViolation,
                spec.label + " weights off by relative " + std::to_string(residual));
  }
  return spec;
}

double normalization_residual(const SemivalueSpec& spec) {
  const int n = static_cast<int>(spec.n);
  CompensatedSum total;
  for (int k = 1; k <= n; ++k) {
    const double w = spec.weights[k - 1];
    if (w == 0.0) continue;
    const double term = std::exp(log_binomial(n - 1, k - 1) + std::log(std::abs(w)));
    total += w < 0 ? -term : term;
  }
  return std::abs(total.value() - n) / n;
}

double DistinguishabilityProfile::tau() const {
  if (deltas.empty()) return 0.0;
  return *std::min_element(deltas.begin(), deltas.end());
}

ValueVector exact_semivalue(const UtilityOracle& oracle, const SemivalueSpec& spec,
                            const ExactOptions& options) {
  if (oracle.n() != spec.n) throw Error(ErrorCode::kLengthMismatch, "oracle/spec cohort mismatch");
  const auto table = table_for(oracle, options);
  return exact_semivalue(table, spec);
}

ValueVector exact_semivalue(std::span<const double> table, const SemivalueSpec& spec) {
  const std::size_t n = spec.n;
  if (table.size() != (std::size_t{1} << n)) {
    throw Error(ErrorCode::kLengthMismatch, "utility table must have 2^n entries");
  }
  ValueVector out;
  out.values.assign(n, 0.0);
  out.spec_label = spec.label;
  out.exact = true;

  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    CompensatedSum acc;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      const double w = spec.weights[static_cast<std::size_t>(std::popcount(mask))];
      if (w == 0.0) continue;
      acc += w * (table[mask | bit] - table[mask]);
    }
    out.values[i] = acc.value() / static_cast<double>(n);
  }
  return out;
}

ValueVector leave_one_out_values(const UtilityOracle& oracle, std::size_t workers,
                                 std::uint64_t eval_seed) {
  const std::size_t n = oracle.n();
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "empty cohort");
  const SubsetKey full = SubsetKey::full(n);
  // scores[n] is U(N), scores[i] is U(N \ i).
  std::vector<double> scores(n + 1);
  parallel_for(n + 1, workers, [&](std::size_t q) {
    const SubsetKey s = q == n ? full : full.without(q);
    double u;
    try {
      u = oracle.evaluate(s, eval_seed);
    } catch (const OracleFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw OracleFailure(s.to_string(), e.what());
    }
    if (!std::isfinite(u)) throw OracleFailure(s.to_string(), "non-finite score");
    scores[q] = u;
  });
  ValueVector out{std::vector<double>(n), "loo", true};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = scores[n] - scores[i];
  return out;
}

double marginal_contribution(const UtilityOracle& oracle, std::size_t i, const SubsetKey& s,
                             std::uint64_t eval_seed) {
  if (s.contains(i)) {
    throw Error(ErrorCode::kMemberAlreadyPresent,
                "point " + std::to_string(i) + " already in {" + s.to_string() + "}");
  }
  return oracle.evaluate(s.with(i), eval_seed) - oracle.evaluate(s, eval_seed);
}

DistinguishabilityProfile distinguishability_profile(const UtilityOracle& oracle, std::size_t i,
                                                     std::size_t j,
                                                     const ExactOptions& options) {
  check_pair(oracle.n(), i, j);
  const auto table = table_for(oracle, options);
  return distinguishability_profile(table, oracle.n(), i, j);
}

DistinguishabilityProfile distinguishability_profile(std::span<const double> table, std::size_t n,
                                                     std::size_t i, std::size_t j) {
  check_pair(n, i, j);
  if (table.size() != (std::size_t{1} << n)) {
    throw Error(ErrorCode::kLengthMismatch, "utility table must have 2^n entries");
  }
  const std::uint64_t bi = std::uint64_t{1} << i;
  const std::uint64_t bj = std::uint64_t{1} << j;
  std::vector<CompensatedSum> bucket(n - 1);
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (mask & (bi | bj)) continue;
    bucket[static_cast<std::size_t>(std::popcount(mask))] += table[mask | bi] - table[mask | bj];
  }
  DistinguishabilityProfile profile;
  profile.i = i;
  profile.j = j;
  profile.deltas.resize(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    profile.deltas[k - 1] =
        bucket[k - 1].value() / binomial(static_cast<int>(n) - 2, static_cast<int>(k) - 1);
  }
  return profile;
}

double pairwise_difference(const UtilityOracle& oracle, const SemivalueSpec& spec, std::size_t i,
                           std::size_t j, const ExactOptions& options) {
  check_pair(oracle.n(), i, j);
  const auto table = table_for(oracle, options);
  return pairwise_difference(table, spec, i, j);
}

double pairwise_difference(std::span<const double> table, const SemivalueSpec& spec,
                           std::size_t i, std::size_t j) {
  const auto profile = distinguishability_profile(table, spec.n, i, j);
  const int n = static_cast<int>(spec.n);
  CompensatedSum acc;
  for (int k = 1; k <= n - 1; ++k) {
    acc += (spec.w(k) + spec.w(k + 1)) * binomial(n - 2, k - 1) * profile.deltas[k - 1];
  }
  return acc.value();
}

}  // namespace dv
