// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../brute.hpp"
#include "../cli_harness.hpp"
#include "dv/estimators.hpp"
#include "dv/experiments.hpp"
#include "dv/numeric.hpp"
#include "dv/oracle.hpp"
#include "dv/robustness.hpp"
#include "dv/semivalue.hpp"

namespace {

using dv::WeightRequest;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0: no limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<WeightRequest> builtins() {
  return {WeightRequest::loo(), WeightRequest::shapley(), WeightRequest::banzhaf(),
          WeightRequest::beta_shapley(16, 1), WeightRequest::beta_shapley(4, 1),
          WeightRequest::beta_shapley(1, 4)};
}

dv::SemivalueSpec random_spec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> w(n);
  double norm = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    w[k - 1] = unif(rng) + 1e-6;
    norm += brute::choose(static_cast<int>(n) - 1, static_cast<int>(k) - 1) * w[k - 1];
  }
  for (double& x : w) x *= static_cast<double>(n) / norm;
  return dv::make_weights(WeightRequest::from_vector(w), n);
}

const dv::SyntheticGame& game10() {
  static const auto g = dv::synthetic_game(10, 0, dv::TrainerConfig{});
  return g;
}

const std::vector<double>& banzhaf10() {
  static const auto v = brute::banzhaf(game10().table->table(), 10);
  return v;
}

// --- 1 ---------------------------------------------------------------------
Outcome closed_form_margins() {
  double worst = 0;
  for (std::size_t n = 2; n <= 12; ++n) {
    for (double tau : {0.3, 1.0}) {
      const auto loo = dv::safety_margin(dv::make_weights(WeightRequest::loo(), n), tau).margin;
      const auto banz = dv::safety_margin(dv::make_weights(WeightRequest::banzhaf(), n), tau).margin;
      const auto shap = dv::safety_margin(dv::make_weights(WeightRequest::shapley(), n), tau).margin;
      // LOO/Shapley closed forms: tau and tau (n-1) / sqrt(sum_k C(n-2,k-1)^-1).
      double inv = 0;
      for (std::size_t k = 1; k <= n - 1; ++k) inv += 1.0 / brute::choose(n - 2, k - 1);
      worst = std::max({worst, std::abs(loo - tau), std::abs(banz - tau * std::pow(2.0, n / 2.0 - 1)),
                        std::abs(shap - tau * (n - 1) / std::sqrt(inv))});
    }
  }
  const double shap3 = dv::safety_margin(dv::make_weights(WeightRequest::shapley(), 3), 1.0).margin;
  worst = std::max(worst, std::abs(shap3 - std::sqrt(2.0)));
  return {worst <= 1e-9, "max abs error " + fmt("%.3g", worst)};
}

// --- 2 ---------------------------------------------------------------------
Outcome banzhaf_maximality() {
  std::mt19937_64 rng(2);
  double worst = -INFINITY;
  for (std::size_t n = 3; n <= 10; ++n) {
    const double banz = dv::safety_margin(dv::make_weights(WeightRequest::banzhaf(), n), 1.0).margin;
    for (int t = 0; t < 200; ++t) {
      worst = std::max(worst, dv::safety_margin(random_spec(n, rng), 1.0).margin - banz);
    }
  }
  return {worst <= 1e-9, "max(sample - banzhaf) " + fmt("%.3g", worst)};
}

// --- 3 ---------------------------------------------------------------------
double worst_flip_ratio_error(bool against_l2) {
  double worst = 0;
  for (const auto& r : {WeightRequest::loo(), WeightRequest::shapley(), WeightRequest::banzhaf()}) {
    for (std::size_t n = 2; n <= 8; ++n) {
      const auto res = dv::flip_test(dv::make_weights(r, n), 0.1);
      const double ref = against_l2 ? res.l2_threshold : res.closed_form_margin;
      worst = std::max(worst, std::abs(res.empirical_threshold / ref - 1.0));
    }
  }
  return worst;
}

Outcome flip_sharpness() {
  const double worst = worst_flip_ratio_error(false);
  const double l2 = worst_flip_ratio_error(true);
  std::ostringstream d;
  d << "max |bisection/closed form - 1| = " << fmt("%.6f", worst)
    << " (bisection/|D|/||a|| within " << fmt("%.2g", l2) << ")";
  return {worst <= 0.01, d.str()};
}

// --- 4 ---------------------------------------------------------------------
Outcome lipschitz_agreement() {
  double worst = 0, banz_err = 0;
  for (std::size_t n = 2; n <= 10; ++n) {
    for (const auto& r : builtins()) {
      const auto rep = dv::lipschitz_constant(dv::make_weights(r, n), true);
      worst = std::max(worst, std::abs(rep.closed_form - *rep.numeric_operator_norm));
    }
    const auto b = dv::lipschitz_constant(dv::make_weights(WeightRequest::banzhaf(), n), false);
    banz_err = std::max(banz_err, std::abs(b.closed_form - std::pow(2.0, -(n / 2.0 - 1))));
  }
  return {worst <= 1e-6 && banz_err <= 1e-15,
          "closed vs numeric " + fmt("%.3g", worst) + ", banzhaf vs 2^-(n/2-1) " + fmt("%.3g", banz_err)};
}

// --- 5 ---------------------------------------------------------------------
Outcome estimator_correctness() {
  const auto& g = game10();
  const auto est = dv::msr_estimate(dv::draw_ledger(*g.table, 50000, 5));
  const double err = dv::linf_distance(est.values, banzhaf10());
  std::vector<std::size_t> ms;
  for (int e = 8; e <= 14; ++e) ms.push_back(std::size_t{1} << e);
  const auto slope = dv::msr_error_slope(*g.table, banzhaf10(), ms, 20, 55);
  return {err <= 0.05 && std::abs(slope.slope + 0.5) <= 0.15,
          "linf error at m=50000 " + fmt("%.4f", err) + ", log-log slope " + fmt("%.3f", slope.slope)};
}

// --- 6 ---------------------------------------------------------------------
Outcome msr_beats_mc() {
  const auto cmp = dv::msr_vs_mc(*game10().table, banzhaf10(), 4096, 20, 66);
  // Context only: the long-run win rate over 50 further blocks of 20 seeds.
  std::size_t wins = 0;
  for (std::uint64_t b = 0; b < 50; ++b) wins += dv::msr_vs_mc(*game10().table, banzhaf10(), 4096, 20, 6600 + b).msr_wins;
  return {cmp.msr_wins >= 18, "MSR lower l2 error on " + std::to_string(cmp.msr_wins) +
                                  "/20 seeds (long-run win rate " + fmt("%.3f", wins / 1000.0) + ")"};
}

// --- 7 ---------------------------------------------------------------------
Outcome axioms() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0;
  for (int g = 0; g < 50; ++g) {
    const std::size_t n = 2 + g % 7;
    const std::size_t cols = std::size_t{1} << n;
    std::vector<double> u(cols), v(cols);
    for (auto& x : u) x = unif(rng);
    for (auto& x : v) x = unif(rng);
    const double a = unif(rng), b = unif(rng);
    std::vector<double> mix(cols);
    for (std::size_t s = 0; s < cols; ++s) mix[s] = a * u[s] + b * v[s];

    // Points 0 and 1 made symmetric; point n-1 made a dummy worth c.
    const double c = unif(rng);
    std::vector<double> sym(cols), dummy(cols);
    for (std::size_t s = 0; s < cols; ++s) {
      const std::size_t swapped = (s & ~std::size_t{3}) | ((s & 1) << 1) | ((s >> 1) & 1);
      sym[s] = 0.5 * (u[s] + u[swapped]);
      const std::size_t top = std::size_t{1} << (n - 1);
      dummy[s] = u[s & ~top] + ((s & top) ? c : 0.0);
    }

    for (const auto& r : builtins()) {
      const auto spec = dv::make_weights(r, n);
      const auto pu = dv::exact_semivalue(u, spec).values;
      const auto pv = dv::exact_semivalue(v, spec).values;
      const auto pm = dv::exact_semivalue(mix, spec).values;
      const auto ps = dv::exact_semivalue(sym, spec).values;
      const auto pd = dv::exact_semivalue(dummy, spec).values;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(pm[i] - (a * pu[i] + b * pv[i])));
      worst = std::max(worst, std::abs(ps[0] - ps[1]));
      worst = std::max(worst, std::abs(pd[n - 1] - c));
    }
    const auto shap = dv::exact_semivalue(u, dv::make_weights(WeightRequest::shapley(), n)).values;
    double total = 0;
    for (double x : shap) total += x;
    worst = std::max(worst, std::abs(total - (u[cols - 1] - u[0])));
  }
  return {worst <= 1e-9, "max violation " + fmt("%.3g", worst)};
}

// --- 8 ---------------------------------------------------------------------
Outcome rank_stability() {
  const std::vector<WeightRequest> methods{WeightRequest::banzhaf(), WeightRequest::shapley(),
                                           WeightRequest::loo()};
  const std::vector<double> sigmas{0.05, 0.1, 0.2, 0.5};
  const auto rows = dv::gaussian_rank_stability(game10().table, methods, sigmas, 20, 8);
  bool ok = true;
  std::ostringstream d;
  for (double s : sigmas) {
    double b = 0, sh = 0, l = 0;
    for (const auto& r : rows) {
      if (r.level != s) continue;
      (r.method == "banzhaf" ? b : r.method == "shapley" ? sh : l) = r.mean_spearman;
    }
    ok &= b - sh >= -0.02 && sh - l >= -0.02;
    d << "sigma " << s << ": " << fmt("%.3f", b) << "/" << fmt("%.3f", sh) << "/" << fmt("%.3f", l) << "; ";
  }
  return {ok, "banzhaf/shapley/loo " + d.str()};
}

// --- 9 ---------------------------------------------------------------------
Outcome noisy_plateau() {
  const double b = 0.05;
  const std::vector<std::size_t> ms{1u << 14, 1u << 16};
  const auto rep = dv::noisy_plateau(game10().table, b, 0, ms, 9);
  const double e14 = rep.linf_error[0], e16 = rep.linf_error[1];
  return {e16 <= 0.02 + 2 * b && e16 - e14 <= 0.01,
          "linf error " + fmt("%.4f", e14) + " at 2^14, " + fmt("%.4f", e16) + " at 2^16"};
}

// --- 10 --------------------------------------------------------------------
Outcome detection() {
  dv::DetectionConfig config;
  config.seed = 10;
  const std::vector<std::string> methods{"banzhaf-msr"};
  const auto out = dv::detection_experiment(config, methods);
  const double f1 = out.methods[0].report.f1;
  return {f1 > 0.1 && f1 >= 0.15, "banzhaf-msr F1 " + fmt("%.3f", f1) + " (chance 0.1)"};
}

// --- 11 --------------------------------------------------------------------
Outcome cli_reproducible() {
  const std::vector<std::string> commands{
      "value --synthetic 8 --method banzhaf-exact",
      "value --synthetic 8 --method shapley-exact",
      "value --synthetic 8 --method loo-exact",
      "value --synthetic 8 --method beta-exact --spec 'beta(4,1)'",
      "value --synthetic 8 --method msr --samples 2000",
      "value --synthetic 8 --method mc --samples 20",
      "value --synthetic 8 --method permutation --samples 50",
      "value --synthetic 8 --method msr --samples 500 --optimizer minibatch_sgd --workers 2",
      "value --synthetic 8 --method msr --samples 500 --noise-sigma 0.1",
      "robustness margin --spec shapley --n 9 --tau 0.2",
      "robustness lipschitz --spec 'beta(16,1)' --n 9",
      "robustness fliptest --spec banzhaf --n 6",
      "stability --mode gaussian --synthetic 8 --trials 5",
      "stability --mode topk --synthetic 8 --runs 3",
      "stability --mode repeat --synthetic 5 --optimizer minibatch_sgd --epochs 5 --ks 1,2 "
      "--reference-k 4 --trials 2",
      "detect --synthetic 40 --samples 2000 --methods banzhaf-msr,loo,shapley-permutation "
      "--permutations 3 --weighted-trials 2",
      "convergence --synthetic 8 --budgets 256,512,1024 --seeds 2 --estimators "
      "msr,simple_mc,permutation_shapley",
  };
  const auto dir = cli::scratch("acceptance");
  std::size_t same = 0;
  std::string first_bad;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::string payloads[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = "run" + std::to_string(c) + "_" + std::to_string(rep) + ".json";
      const auto r = cli::dvtool(commands[c] + " --seed 11 --out " + out, dir);
      ran &= r.code == 0;
      payloads[rep] = cli::slurp(dir / out);
    }
    if (ran && !payloads[0].empty() && payloads[0] == payloads[1]) {
      ++same;
    } else if (first_bad.empty()) {
      first_bad = commands[c];
    }
  }
  std::filesystem::remove_all(dir);
  std::string detail = std::to_string(same) + "/" + std::to_string(commands.size()) +
                       " commands byte-identical";
  if (!first_bad.empty()) detail += "; first mismatch: " + first_bad;
  return {same == commands.size(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form safety margins", 1, closed_form_margins},
      {2, "banzhaf maximal margin", 10, banzhaf_maximality},
      {3, "flip threshold matches closed-form margin", 60, flip_sharpness},
      {4, "lipschitz closed form vs operator norm", 60, lipschitz_agreement},
      {5, "MSR accuracy and convergence rate", 600, estimator_correctness},
      {6, "MSR beats simple MC at equal budget", 300, msr_beats_mc},
      {7, "semivalue axioms", 0, axioms},
      {8, "rank stability ordering under noise", 600, rank_stability},
      {9, "MSR plateau under bounded noise", 300, noisy_plateau},
      {10, "mislabel detection beats chance", 900, detection},
      {11, "CLI reruns byte-identical", 0, cli_reproducible},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      pass = false;
      o.detail += "; over the " + fmt("%.0f", c.time_limit_s) + " s budget";
    }
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << o.detail
              << " (" << fmt("%.2f", secs) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
