#include <benchmark/benchmark.h>

#include <spdlog/spdlog.h>

#include "purrfect/haptics.hpp"
#include "purrfect/simulate.hpp"

using namespace purrfect;

namespace {

void BM_SimulateParticipant(benchmark::State& state) {
  spdlog::set_level(spdlog::level::warn);
  const auto condition = state.range(0) ? Condition::AudioHaptic : Condition::AudioOnly;
  const auto plan = SessionPlan::standard("P01", condition, 3);
  const auto behavior = state.range(0) ? BehaviorSpec::audio_haptic_default()
                                       : BehaviorSpec::audio_only_default();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    TrialRng rng(++seed);
    benchmark::DoNotOptimize(simulate_participant(plan, behavior, rng));
  }
}
BENCHMARK(BM_SimulateParticipant)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FrameCodec(benchmark::State& state) {
  const HapticCommand cmd{6, 200, 500, 0};
  for (auto _ : state) benchmark::DoNotOptimize(decode_frame(encode_frame(cmd)));
}
BENCHMARK(BM_FrameCodec);

}  // namespace
