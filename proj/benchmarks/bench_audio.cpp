#include <benchmark/benchmark.h>

#include "purrfect/audio.hpp"

using namespace purrfect;

namespace {

Trial trial() {
  const auto base = tone_from_midi(48);
  return Trial{0, base, Interval(5), apply_interval(base, Interval(5)), PhaseKind::Training};
}

void BM_RenderTrial(benchmark::State& state) {
  const auto t = trial();
  const int rate = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_trial(t, {}, rate));
}
BENCHMARK(BM_RenderTrial)->Arg(22050)->Arg(44100)->Unit(benchmark::kMicrosecond);

void BM_EncodeDecodeWav(benchmark::State& state) {
  const auto pcm = render_trial(trial(), {});
  for (auto _ : state) benchmark::DoNotOptimize(decode_wav(encode_wav(pcm)));
}
BENCHMARK(BM_EncodeDecodeWav)->Unit(benchmark::kMicrosecond);

}  // namespace
