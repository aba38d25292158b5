#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "purrfect/audio.hpp"
#include "purrfect/error.hpp"

using namespace purrfect;

namespace {

Trial make_trial(int base_midi, int degree) {
  const auto base = tone_from_midi(base_midi);
  const Interval iv(degree);
  return Trial{0, base, iv, apply_interval(base, iv), PhaseKind::Training};
}

std::vector<double> segment(const PcmBuffer& pcm, std::size_t from, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = pcm.samples[from + i];
  return out;
}

}  // namespace

TEST(Audio, LengthMatchesTiming) {
  const StimulusTiming timing;
  const auto pcm = render_trial(make_trial(48, 5), timing);
  EXPECT_EQ(pcm.sample_rate_hz, 44100);
  EXPECT_EQ(pcm.samples.size(), ms_to_samples(1200, 44100));
  EXPECT_EQ(pcm.samples.size(), 52920u);
}

TEST(Audio, GapIsExactSilence) {
  const StimulusTiming timing;
  const auto pcm = render_trial(make_trial(48, 5), timing);
  const auto note = ms_to_samples(500, 44100), onset2 = ms_to_samples(700, 44100);
  for (std::size_t i = note; i < onset2; ++i) ASSERT_EQ(pcm.samples[i], 0) << i;
}

TEST(Audio, DominantFrequencyPerNote) {
  StimulusTiming timing;
  timing.note_ms = 100;
  const auto trial = make_trial(55, 6);
  const auto pcm = render_trial(trial, timing);
  const auto n = ms_to_samples(100, 44100);
  const auto first = segment(pcm, 0, n);
  const auto second = segment(pcm, ms_to_samples(300, 44100), n);
  const double resolution = 44100.0 / n;
  EXPECT_LE(std::abs(double(oracle::dominant_bin(first)) - trial.base.frequency_hz / resolution), 1.0);
  EXPECT_LE(std::abs(double(oracle::dominant_bin(second)) - trial.second.frequency_hz / resolution),
            1.0);
}

TEST(Audio, NoClicksAtEdges) {
  const StimulusTiming timing;
  const auto trial = make_trial(67, 1);
  const auto pcm = render_trial(trial, timing);
  const double max_step =
      2 * std::numbers::pi * trial.base.frequency_hz / 44100.0 * kDefaultAmplitude * 32767.0 + 2.0;
  for (std::size_t i = 1; i < pcm.samples.size(); ++i) {
    ASSERT_LE(std::abs(pcm.samples[i] - pcm.samples[i - 1]), max_step) << i;
  }
  EXPECT_EQ(pcm.samples.front(), 0);
  EXPECT_LE(std::abs(pcm.samples.back()), 60);
}

TEST(Audio, ZeroGapStillRenders) {
  StimulusTiming timing;
  timing.gap_ms = 0;
  const auto pcm = render_trial(make_trial(48, 8), timing);
  EXPECT_EQ(pcm.samples.size(), ms_to_samples(1000, 44100));
}

TEST(Audio, InvalidTimingRejected) {
  StimulusTiming timing;
  timing.note_ms = 20;
  EXPECT_THROW(timing.validate(), Error);
  timing = {};
  timing.gap_ms = -1;
  EXPECT_THROW(render_trial(make_trial(48, 1), timing), Error);
  EXPECT_THROW(render_trial(make_trial(48, 1), StimulusTiming{}, 4000), Error);
  EXPECT_THROW(render_trial(make_trial(48, 1), StimulusTiming{}, 44100, 1.5), Error);
}

TEST(Audio, DeterministicRendering) {
  const auto a = encode_wav(render_trial(make_trial(50, 3), {}));
  const auto b = encode_wav(render_trial(make_trial(50, 3), {}));
  EXPECT_EQ(a, b);
}

TEST(Wav, RoundTripIsBitExact) {
  const auto pcm = render_trial(make_trial(60, 4), {}, 22050);
  const auto bytes = encode_wav(pcm);
  ASSERT_EQ(bytes.size(), 44 + 2 * pcm.samples.size());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RIFF");
  EXPECT_EQ(std::string(bytes.begin() + 8, bytes.begin() + 12), "WAVE");
  const auto back = decode_wav(bytes);
  EXPECT_EQ(back.sample_rate_hz, 22050);
  EXPECT_EQ(back.samples, pcm.samples);
  EXPECT_EQ(encode_wav(back), bytes);
}

TEST(Wav, DecodeRejectsForeignLayouts) {
  auto bytes = encode_wav(render_trial(make_trial(60, 4), {}));
  auto truncated = bytes;
  truncated.resize(30);
  EXPECT_THROW(decode_wav(truncated), Error);
  auto bad_tag = bytes;
  bad_tag[0] = 'X';
  EXPECT_THROW(decode_wav(bad_tag), Error);
  auto stereo = bytes;
  stereo[22] = 2;
  EXPECT_THROW(decode_wav(stereo), Error);
}

TEST(Audio, DescriptorCarriesFrequencies) {
  const auto trial = make_trial(48, 8);
  const auto d = describe_stimulus(trial, {});
  EXPECT_DOUBLE_EQ(d.base_hz, trial.base.frequency_hz);
  EXPECT_DOUBLE_EQ(d.second_hz, trial.second.frequency_hz);
  EXPECT_EQ(d.gap_ms, 200);
}
