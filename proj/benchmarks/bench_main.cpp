#include <benchmark/benchmark.h>

#include "dv/estimators.hpp"
#include "dv/experiments.hpp"
#include "dv/oracle.hpp"
#include "dv/robustness.hpp"
#include "dv/semivalue.hpp"
#include "dv/trainer.hpp"

namespace {

void BM_ExactBanzhafTable(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto game = dv::random_game(n, 1);
  const auto spec = dv::make_weights(dv::WeightRequest::banzhaf(), n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dv::exact_semivalue(game->table(), spec));
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ExactBanzhafTable)->DenseRange(8, 16, 4);

void BM_MsrEstimate(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto game = dv::random_game(12, 2);
  const auto ledger = dv::draw_ledger(*game, m, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dv::msr_estimate(ledger));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m));
}
BENCHMARK(BM_MsrEstimate)->Arg(1 << 10)->Arg(1 << 14);

void BM_DrawLedger(benchmark::State& state) {
  const auto game = dv::random_game(12, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dv::draw_ledger(*game, 4096, 5));
  }
}
BENCHMARK(BM_DrawLedger);

void BM_TrainLogistic(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto data = dv::synthetic_gaussian_dataset(rows, 6);
  const dv::TrainerConfig config;
  const auto all = dv::SubsetKey::full(rows);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dv::train(config, all, data.train));
  }
}
BENCHMARK(BM_TrainLogistic)->Arg(10)->Arg(100)->Arg(200);

void BM_LipschitzNumeric(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto spec = dv::make_weights(dv::WeightRequest::shapley(), n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dv::lipschitz_constant(spec, true));
  }
}
BENCHMARK(BM_LipschitzNumeric)->Arg(6)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
