#include <benchmark/benchmark.h>

#include "purrfect/stats/glmm.hpp"
#include "purrfect/stats/marginal.hpp"
#include "support/synth.hpp"

using namespace purrfect;

namespace {

ObservationTable binomial(int trials) {
  TrialRng rng(17);
  return testsupport::binomial_table({}, 10, 8, trials, rng);
}

void BM_BinomialFit(benchmark::State& state) {
  const auto table = binomial(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::fit_glmm(table, stats::GlmmSpec::accuracy()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(table.size()));
}
BENCHMARK(BM_BinomialFit)->Arg(40)->Arg(170)->Unit(benchmark::kMillisecond);

void BM_GaussianFit(benchmark::State& state) {
  TrialRng rng(18);
  const auto table = testsupport::gaussian_table({6.9, -1.7, -0.003, 0.001, 0.6}, 2.5, 10, 8, 170, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::fit_glmm(table, stats::GlmmSpec::response_time()));
  }
}
BENCHMARK(BM_GaussianFit)->Unit(benchmark::kMillisecond);

void BM_LaplaceObjective(benchmark::State& state) {
  const auto table = binomial(170);
  const auto data = stats::build_model_data(table, stats::Family::BinomialLogit);
  const stats::LaplaceObjective objective(data);
  Eigen::VectorXd beta(4), grad;
  beta << -0.7, 0.9, 3e-4, 6e-4;
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(beta, 0.5, &grad));
}
BENCHMARK(BM_LaplaceObjective);

void BM_Marginal(benchmark::State& state) {
  const auto table = binomial(170);
  const auto fit = stats::fit_glmm(table, stats::GlmmSpec::accuracy());
  const auto mode = state.range(0) ? stats::MarginalMode::Integrated : stats::MarginalMode::Conditional;
  for (auto _ : state) benchmark::DoNotOptimize(stats::marginal_predictions(fit, table, mode));
}
BENCHMARK(BM_Marginal)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace
