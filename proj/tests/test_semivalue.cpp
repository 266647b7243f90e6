#include <gtest/gtest.h>

#include <random>

#include "brute.hpp"
#include "dv/errors.hpp"
#include "dv/oracle.hpp"
#include "dv/robustness.hpp"
#include "dv/semivalue.hpp"

namespace {

using dv::WeightRequest;

std::vector<WeightRequest> builtins() {
  return {WeightRequest::loo(), WeightRequest::shapley(), WeightRequest::banzhaf(),
          WeightRequest::beta_shapley(16, 1), WeightRequest::beta_shapley(4, 1),
          WeightRequest::beta_shapley(1, 4)};
}

// The n = 2 game used throughout the examples.
std::shared_ptr<dv::TableGame> two_point_game() {
  return std::make_shared<dv::TableGame>(2, std::vector<double>{0.0, 1.0, 0.0, 2.0});
}

}  // namespace

TEST(MakeWeights, Examples) {
  EXPECT_EQ(dv::make_weights(WeightRequest::loo(), 3).weights, (std::vector<double>{0, 0, 3}));
  EXPECT_EQ(dv::make_weights(WeightRequest::banzhaf(), 4).weights,
            (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
  const auto shap = dv::make_weights(WeightRequest::shapley(), 3).weights;
  ASSERT_EQ(shap.size(), 3u);
  EXPECT_DOUBLE_EQ(shap[0], 1.0);
  EXPECT_DOUBLE_EQ(shap[1], 0.5);
  EXPECT_DOUBLE_EQ(shap[2], 1.0);
}

TEST(MakeWeights, NormalizationHoldsForEveryFamily) {
  for (std::size_t n : {1u, 2u, 5u, 12u, 40u, 200u}) {
    for (const auto& r : builtins()) {
      const auto spec = dv::make_weights(r, n);
      ASSERT_EQ(spec.weights.size(), n);
      EXPECT_LE(dv::normalization_residual(spec), 1e-9) << spec.label << " n=" << n;
      for (double w : spec.weights) EXPECT_GE(w, 0.0);
    }
  }
}

TEST(MakeWeights, BetaOneOneIsShapley) {
  const auto a = dv::make_weights(WeightRequest::beta_shapley(1, 1), 9).weights;
  const auto b = brute::shapley_weights(9);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(MakeWeights, RejectsBadInput) {
  EXPECT_THROW(dv::make_weights(WeightRequest::from_vector({1, 1, 1}), 3), dv::Error);
  try {
    dv::make_weights(WeightRequest::from_vector({1, 1, 1}), 3);
  } catch (const dv::Error& e) {
    EXPECT_EQ(e.code(), dv::ErrorCode::kNormalizationViolation);
  }
  EXPECT_THROW(dv::make_weights(WeightRequest::from_vector({1, 1}), 3), dv::Error);
  EXPECT_THROW(dv::make_weights(WeightRequest::beta_shapley(0, 1), 3), dv::Error);
  EXPECT_THROW(dv::make_weights(WeightRequest::beta_shapley(1, -2), 3), dv::Error);
  EXPECT_THROW(dv::make_weights(WeightRequest::banzhaf(), 0), dv::Error);
  EXPECT_NO_THROW(dv::make_weights(WeightRequest::from_vector({1, 0.5, 1}), 3));
}

TEST(MakeWeights, ParsesNames) {
  EXPECT_EQ(dv::make_weights(WeightRequest::parse("beta(4,1)"), 5).label,
            dv::make_weights(WeightRequest::beta_shapley(4, 1), 5).label);
  EXPECT_EQ(WeightRequest::parse("shapley").kind, dv::WeightKind::kShapley);
  EXPECT_THROW(WeightRequest::parse("nope"), dv::Error);
  EXPECT_THROW(WeightRequest::parse("beta(1)"), dv::Error);
}

TEST(ExactSemivalue, ConstantGameIsZero) {
  const dv::ConstantGame u(5, 0.7);
  for (const auto& r : builtins()) {
    for (double v : dv::exact_semivalue(u, dv::make_weights(r, 5)).values) EXPECT_EQ(v, 0.0);
  }
}

TEST(ExactSemivalue, AdditiveGameGivesContributions) {
  const dv::AdditiveGame u({0.1, 0.2, 0.3});
  for (const auto& r : builtins()) {
    const auto v = dv::exact_semivalue(u, dv::make_weights(r, 3));
    EXPECT_EQ(v.values.size(), 3u);
    EXPECT_TRUE(v.exact);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(v.values[i], 0.1 * (i + 1), 1e-12);
  }
}

TEST(ExactSemivalue, TwoPointBanzhafByHand) {
  const auto v = dv::exact_semivalue(*two_point_game(), dv::make_weights(WeightRequest::banzhaf(), 2));
  EXPECT_NEAR(v.values[0], 1.5, 1e-15);
  EXPECT_NEAR(v.values[1], 0.5, 1e-15);
  EXPECT_EQ(v.spec_label, "banzhaf");
}

TEST(ExactSemivalue, QueriesEachSubsetOnce) {
  auto counting = std::make_shared<dv::CountingOracle>(dv::random_game(7, 3));
  dv::exact_semivalue(*counting, dv::make_weights(WeightRequest::shapley(), 7));
  EXPECT_EQ(counting->calls(), 128u);
}

TEST(ExactSemivalue, CohortCap) {
  const dv::ConstantGame u(21, 0.5);
  try {
    dv::exact_semivalue(u, dv::make_weights(WeightRequest::banzhaf(), 21));
    FAIL();
  } catch (const dv::Error& e) {
    EXPECT_EQ(e.code(), dv::ErrorCode::kCohortTooLarge);
  }
}

TEST(ExactSemivalue, OracleFailureNamesSubset) {
  const dv::FunctionGame u(
      3, [](const dv::SubsetKey& s, std::uint64_t) -> double {
        if (s.to_string() == "0,2") throw std::runtime_error("boom");
        return 0.5;
      },
      true, "faulty");
  try {
    dv::exact_semivalue(u, dv::make_weights(WeightRequest::banzhaf(), 3));
    FAIL();
  } catch (const dv::OracleFailure& e) {
    EXPECT_EQ(e.subset(), "0,2");
  }
}

TEST(ExactSemivalue, MatchesIndependentReferences) {
  for (int n = 1; n <= 7; ++n) {
    const auto g = dv::random_game(n, 100 + n);
    const auto& t = g->table();
    const auto shap = dv::exact_semivalue(t, dv::make_weights(WeightRequest::shapley(), n)).values;
    EXPECT_LE(brute::max_abs_diff(shap, brute::shapley_by_permutations(t, n)), 1e-12);
    const auto banz = dv::exact_semivalue(t, dv::make_weights(WeightRequest::banzhaf(), n)).values;
    EXPECT_LE(brute::max_abs_diff(banz, brute::banzhaf(t, n)), 1e-12);
    const auto loo = dv::exact_semivalue(t, dv::make_weights(WeightRequest::loo(), n)).values;
    EXPECT_LE(brute::max_abs_diff(loo, brute::loo(t, n)), 1e-12);
    const auto beta_spec = dv::make_weights(WeightRequest::beta_shapley(4, 1), n);
    const auto beta = dv::exact_semivalue(t, beta_spec).values;
    EXPECT_LE(brute::max_abs_diff(beta, brute::semivalue(t, n, beta_spec.weights)), 1e-12);
  }
}

TEST(LeaveOneOut, FastPathMatchesEnumeration) {
  const auto g = dv::random_game(9, 4);
  auto counting = std::make_shared<dv::CountingOracle>(g);
  const auto fast = dv::leave_one_out_values(*counting);
  EXPECT_EQ(counting->calls(), 10u);
  EXPECT_LE(brute::max_abs_diff(fast.values, brute::loo(g->table(), 9)), 1e-15);
}

TEST(MarginalContribution, Examples) {
  const dv::ConstantGame c(4, 0.3);
  EXPECT_EQ(dv::marginal_contribution(c, 1, dv::SubsetKey::from_mask(4, 0b1001)), 0.0);
  const dv::AdditiveGame a({0.1, 0.2, 0.3});
  EXPECT_NEAR(dv::marginal_contribution(a, 2, dv::SubsetKey(3)), 0.3, 1e-15);
  EXPECT_EQ(dv::marginal_contribution(*two_point_game(), 0, dv::SubsetKey::from_mask(2, 0b10)), 2.0);
  try {
    dv::marginal_contribution(a, 1, dv::SubsetKey::from_mask(3, 0b010));
    FAIL();
  } catch (const dv::Error& e) {
    EXPECT_EQ(e.code(), dv::ErrorCode::kMemberAlreadyPresent);
  }
}

TEST(Distinguishability, Examples) {
  const dv::ConstantGame c(5, 0.4);
  for (double d : dv::distinguishability_profile(c, 0, 3).deltas) EXPECT_EQ(d, 0.0);
  const dv::AdditiveGame a({0.1, 0.2, 0.3});
  const auto p = dv::distinguishability_profile(a, 2, 0);
  ASSERT_EQ(p.deltas.size(), 2u);
  for (double d : p.deltas) EXPECT_NEAR(d, 0.2, 1e-15);
  EXPECT_NEAR(p.tau(), 0.2, 1e-15);
  const auto w = dv::worst_case_utility(4, 1, 3, 0.5);
  for (double d : dv::distinguishability_profile(*w, 1, 3).deltas) EXPECT_NEAR(d, 0.5, 1e-15);
  try {
    dv::distinguishability_profile(a, 1, 1);
    FAIL();
  } catch (const dv::Error& e) {
    EXPECT_EQ(e.code(), dv::ErrorCode::kSamePoint);
  }
}

TEST(Distinguishability, ProfileIsAntisymmetricAndMatchesDefinition) {
  const int n = 6;
  const auto g = dv::random_game(n, 17);
  const auto pij = dv::distinguishability_profile(*g, 1, 4);
  const auto pji = dv::distinguishability_profile(*g, 4, 1);
  ASSERT_EQ(pij.deltas.size(), static_cast<std::size_t>(n - 1));
  for (int k = 1; k < n; ++k) {
    EXPECT_NEAR(pij.deltas[k - 1], -pji.deltas[k - 1], 1e-15);
    double sum = 0;
    int count = 0;
    for (std::uint64_t s = 0; s < 64; ++s) {
      if ((s & 0b10010) || std::popcount(s) != k - 1) continue;
      sum += g->at(s | 0b10) - g->at(s | 0b10000);
      ++count;
    }
    EXPECT_EQ(count, static_cast<int>(brute::choose(n - 2, k - 1)));
    EXPECT_NEAR(pij.deltas[k - 1], sum / count, 1e-14);
  }
}

TEST(PairwiseDifference, Examples) {
  const auto banz3 = dv::make_weights(WeightRequest::banzhaf(), 3);
  EXPECT_EQ(dv::pairwise_difference(dv::ConstantGame(3, 0.2), banz3, 0, 1), 0.0);
  EXPECT_NEAR(dv::pairwise_difference(dv::AdditiveGame({0.1, 0.2, 0.3}), banz3, 1, 0), 0.3, 1e-15);
  EXPECT_NEAR(dv::pairwise_difference(*two_point_game(),
                                      dv::make_weights(WeightRequest::banzhaf(), 2), 0, 1),
              2.0, 1e-15);
}

TEST(Properties, PairwiseDifferenceEqualsScaledValueGap) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const auto g = dv::random_game(n, rng());
    for (const auto& r : builtins()) {
      const auto spec = dv::make_weights(r, n);
      const auto phi = dv::exact_semivalue(g->table(), spec).values;
      const std::size_t i = rng() % n;
      const std::size_t j = (i + 1 + rng() % (n - 1)) % n;
      const double d = dv::pairwise_difference(g->table(), spec, i, j);
      EXPECT_NEAR(d, n * (phi[i] - phi[j]), 1e-9);
      if (std::abs(phi[i] - phi[j]) > 1e-9) EXPECT_EQ(d > 0, phi[i] > phi[j]);
    }
  }
}

TEST(Axioms, Linearity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    const auto u1 = dv::random_game(n, rng());
    const auto u2 = dv::random_game(n, rng());
    const double a1 = coef(rng), a2 = coef(rng);
    std::vector<double> mix(u1->table().size());
    for (std::size_t s = 0; s < mix.size(); ++s) mix[s] = a1 * u1->at(s) + a2 * u2->at(s);
    for (const auto& r : builtins()) {
      const auto spec = dv::make_weights(r, n);
      const auto p1 = dv::exact_semivalue(u1->table(), spec).values;
      const auto p2 = dv::exact_semivalue(u2->table(), spec).values;
      const auto pm = dv::exact_semivalue(mix, spec).values;
      for (int i = 0; i < n; ++i) EXPECT_NEAR(pm[i], a1 * p1[i] + a2 * p2[i], 1e-9);
    }
  }
}

TEST(Axioms, SymmetryAndDummy) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 7;
    // Symmetric in points 0 and 1: U depends on |S & {0,1}| and the rest.
    std::vector<double> base(std::size_t{1} << n);
    for (auto& x : base) x = unif(rng);
    std::vector<double> sym(base.size());
    for (std::uint64_t s = 0; s < sym.size(); ++s) {
      const std::uint64_t swapped = (s & ~std::uint64_t{3}) | ((s & 1) << 1) | ((s >> 1) & 1);
      sym[s] = 0.5 * (base[s] + base[swapped]);
    }
    // Point n-1 is a dummy adding c everywhere.
    const double c = unif(rng) - 0.5;
    std::vector<double> dummy(base.size());
    const std::uint64_t last = std::uint64_t{1} << (n - 1);
    for (std::uint64_t s = 0; s < dummy.size(); ++s) dummy[s] = base[s & ~last] + ((s & last) ? c : 0.0);
    for (const auto& r : builtins()) {
      const auto spec = dv::make_weights(r, n);
      const auto ps = dv::exact_semivalue(sym, spec).values;
      EXPECT_NEAR(ps[0], ps[1], 1e-12);
      EXPECT_NEAR(dv::exact_semivalue(dummy, spec).values[n - 1], c, 1e-12);
    }
  }
}

TEST(Axioms, ShapleyEfficiency) {
  for (int n = 1; n <= 12; ++n) {
    const auto g = dv::random_game(n, 900 + n);
    const auto phi = dv::exact_semivalue(g->table(), dv::make_weights(WeightRequest::shapley(), n)).values;
    double sum = 0;
    for (double v : phi) sum += v;
    EXPECT_NEAR(sum, g->table().back() - g->table().front(), 1e-9) << "n=" << n;
  }
}

TEST(Properties, BanzhafEqualsDirectAverage) {
  for (int n = 1; n <= 10; ++n) {
    const auto g = dv::random_game(n, 40 + n);
    const auto phi = dv::exact_semivalue(g->table(), dv::make_weights(WeightRequest::banzhaf(), n)).values;
    EXPECT_LE(brute::max_abs_diff(phi, brute::banzhaf(g->table(), n)), 1e-12);
  }
}

TEST(ExactSemivalue, ParallelEvaluationIsBitIdentical) {
  const auto g = dv::random_game(10, 77);
  const auto spec = dv::make_weights(WeightRequest::shapley(), 10);
  dv::ExactOptions one, four;
  four.workers = 4;
  EXPECT_EQ(dv::exact_semivalue(*g, spec, one).values, dv::exact_semivalue(*g, spec, four).values);
}
