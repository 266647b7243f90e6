#include <gtest/gtest.h>

#include <sstream>

#include "brute.hpp"
#include "dv/errors.hpp"
#include "dv/experiments.hpp"
#include "dv/serialize.hpp"

namespace {

const dv::SyntheticGame& game10() {
  static const auto g = dv::synthetic_game(10, 0, dv::TrainerConfig{});
  return g;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Experiments, SyntheticGameTableMatchesOracle) {
  const auto& g = game10();
  ASSERT_TRUE(g.table);
  EXPECT_EQ(g.table->table().size(), 1024u);
  for (std::uint64_t m : {0u, 5u, 511u, 1023u}) {
    EXPECT_EQ(g.table->at(m), g.oracle->evaluate(dv::SubsetKey::from_mask(10, m), 0));
  }
}

TEST(Experiments, Distances) {
  const std::vector<double> a{0, 1, 2}, b{0, 3, 2};
  EXPECT_EQ(dv::linf_distance(a, b), 2.0);
  EXPECT_EQ(dv::l2_distance(a, b), 2.0);
  const std::vector<double> x{1, 10, 100}, y{1, 0.1, 0.01};
  EXPECT_NEAR(dv::loglog_slope(x, y), -1.0, 1e-12);
  const auto ms = dv::mean_stderr(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(ms.mean, 2.0);
  EXPECT_NEAR(ms.stderr_, 1.0 / std::sqrt(3.0), 1e-15);
}

// Top/bottom-k agreement across noisy runs is at least as high for Banzhaf as
// for LOO on the synthetic game.
TEST(Experiments, TopkBanzhafAtLeastLoo) {
  const std::vector<dv::WeightRequest> methods{dv::WeightRequest::banzhaf(), dv::WeightRequest::loo()};
  const auto rows = dv::topk_stability(game10().table, methods, 0.1, 5, 20, 3);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto* side : {"top", "bottom"}) {
    double banz = -1, loo = -1;
    for (const auto& r : rows) {
      if (r.side != side) continue;
      (r.method == "banzhaf" ? banz : loo) = r.consistency;
    }
    EXPECT_GE(banz, loo) << side;
  }
  std::ostringstream csv;
  dv::write_topk_csv(csv, rows);
  EXPECT_EQ(first_line(csv.str()), "method,sigma,k_percent,side,consistency,runs");
}

TEST(Experiments, GaussianStabilityShape) {
  const std::vector<dv::WeightRequest> methods{dv::WeightRequest::banzhaf(), dv::WeightRequest::loo()};
  const std::vector<double> sigmas{0.0, 0.2};
  const auto rows = dv::gaussian_rank_stability(game10().table, methods, sigmas, 4, 1);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.trials, 4u);
    EXPECT_EQ(r.noise, "gaussian");
    if (r.level == 0.0) EXPECT_DOUBLE_EQ(r.mean_spearman, 1.0);
  }
  std::ostringstream csv;
  dv::write_stability_csv(csv, rows);
  EXPECT_EQ(first_line(csv.str()), "method,noise,level,mean_spearman,stderr,trials");
  const auto again = dv::gaussian_rank_stability(game10().table, methods, sigmas, 4, 1);
  for (std::size_t r = 0; r < rows.size(); ++r) EXPECT_EQ(again[r].mean_spearman, rows[r].mean_spearman);
}

TEST(Experiments, RepeatStabilityImprovesWithK) {
  const auto data = dv::synthetic_gaussian_dataset(6, 2);
  dv::TrainerConfig sgd;
  sgd.optimizer = dv::OptimizerKind::kMinibatchSgd;
  sgd.epochs = 5;
  sgd.batch_size = 2;
  const auto oracle = dv::make_oracle(data.train, data.validation, sgd);
  const std::vector<dv::WeightRequest> methods{dv::WeightRequest::banzhaf()};
  const std::vector<std::size_t> ks{1, 16};
  const auto rows = dv::repeat_rank_stability(oracle, methods, ks, 32, 3, 4);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].noise, "repeat");
  EXPECT_LE(rows[0].mean_spearman, rows[1].mean_spearman + 0.05);
}

TEST(Experiments, ConvergenceRows) {
  const auto& g = game10();
  const auto ref = brute::banzhaf(g.table->table(), 10);
  const std::vector<dv::EstimatorKind> kinds{dv::EstimatorKind::kMsr, dv::EstimatorKind::kSimpleMc};
  const std::vector<std::size_t> budgets{400, 800, 1600};
  const auto rows = dv::convergence_experiment(*g.table, ref, kinds, budgets, 2, 5);
  ASSERT_EQ(rows.size(), 2u * 2u * 3u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.linf_error.has_value());
    EXPECT_LE(*r.linf_error, *r.l2_error + 1e-15);
    EXPECT_LE(r.oracle_calls, r.budget);
  }
  std::ostringstream csv;
  dv::write_convergence_csv(csv, rows);
  EXPECT_EQ(first_line(csv.str()), "estimator,seed,budget,oracle_calls,linf_error,l2_error,relative_spearman");
  const auto none = dv::convergence_experiment(*g.table, {}, kinds, budgets, 1, 5);
  EXPECT_FALSE(none.front().linf_error.has_value());
}

TEST(Experiments, DetectionSmoke) {
  dv::DetectionConfig config;
  config.n_points = 40;
  config.msr_samples = 3000;
  config.permutations = 5;
  config.weighted_trials = 2;
  const std::vector<std::string> methods{"banzhaf-msr", "loo", "shapley-permutation"};
  const auto out = dv::detection_experiment(config, methods);
  EXPECT_EQ(out.flipped.size(), 4u);
  ASSERT_EQ(out.methods.size(), 3u);
  EXPECT_EQ(out.methods[0].oracle_calls, 3000u);
  EXPECT_EQ(out.methods[1].oracle_calls, 41u);
  EXPECT_EQ(out.methods[2].oracle_calls, 5u * 41u);
  for (const auto& m : out.methods) {
    EXPECT_EQ(m.values.size(), 40u);
    ASSERT_TRUE(m.weighted.has_value());
    EXPECT_EQ(m.weighted->accuracies.size(), 2u);
  }
  ASSERT_TRUE(out.uniform_baseline.has_value());
  EXPECT_THROW(dv::detection_experiment(config, std::vector<std::string>{"bogus"}), dv::Error);

  const auto again = dv::detection_experiment(config, methods);
  EXPECT_EQ(nlohmann::json(again.methods[0].report).dump(), nlohmann::json(out.methods[0].report).dump());
}
