#include <set>

#include <gtest/gtest.h>

#include "purrfect/error.hpp"
#include "purrfect/music.hpp"

using namespace purrfect;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::OutOfRange;
}

}  // namespace

TEST(Music, ToneTableEndpointsAndOrder) {
  const auto table = tone_table();
  EXPECT_EQ(table.front().midi, 36);
  EXPECT_EQ(table.back().midi, 71);
  EXPECT_NEAR(table.front().frequency_hz, 65.41, 0.01);
  EXPECT_NEAR(table.back().frequency_hz, 493.88, 0.01);
  for (std::size_t i = 1; i < table.size(); ++i) {
    EXPECT_GT(table[i].frequency_hz, table[i - 1].frequency_hz);
    EXPECT_EQ(table[i].scale_index, static_cast<int>(i));
  }
  EXPECT_DOUBLE_EQ(midi_to_hz(69), 440.0);
}

TEST(Music, OnlyWhiteKeys) {
  for (const auto& t : tone_table()) EXPECT_EQ(note_name(t.midi).find('#'), std::string::npos);
  EXPECT_EQ(note_name(36), "C2");
  EXPECT_EQ(note_name(71), "B4");
  EXPECT_EQ(note_name(61), "C#4");
}

TEST(Music, ToneLookupErrors) {
  EXPECT_EQ(code_of([] { tone_from_midi(35); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([] { tone_from_midi(72); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([] { tone_from_midi(37); }), Errc::NotDiatonic);
  EXPECT_EQ(code_of([] { tone_at(21); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([] { Interval(0); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([] { Interval(9); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([] { apply_interval(tone_from_midi(67), Interval(4)); }), Errc::RangeOverflow);
}

TEST(Music, IntervalsAreDiatonicSteps) {
  const auto c3 = tone_from_midi(48);
  EXPECT_EQ(apply_interval(c3, Interval(1)).midi, 48);
  EXPECT_EQ(apply_interval(c3, Interval(3)).midi, 52);
  EXPECT_EQ(apply_interval(c3, Interval(4)).midi, 53);
  EXPECT_EQ(apply_interval(c3, Interval(8)).midi, 60);
}

TEST(Music, PhaseNamesRoundTrip) {
  for (auto k : {PhaseKind::Questionnaire, PhaseKind::SpatialTest, PhaseKind::PreTest,
                 PhaseKind::Training, PhaseKind::Break, PhaseKind::PostTest}) {
    EXPECT_EQ(phase_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(phase_kind_from_string("Lunch"), Error);
}

TEST(MusicProperty, ChainedTrialsStayInRangeAndLink) {
  TrialRng rng(11);
  std::optional<Trial> prev;
  std::set<int> degrees;
  for (int i = 0; i < 5000; ++i) {
    const Trial t = next_trial(prev, rng, PhaseKind::Training);
    EXPECT_EQ(t.trial_index, i);
    EXPECT_GE(t.base.midi, kLowestMidi);
    EXPECT_LE(t.second.midi, kHighestMidi);
    EXPECT_EQ(t.second.scale_index - t.base.scale_index, t.interval.steps());
    if (prev) {
      // The new base is the previous second tone, possibly dropped by octaves.
      const int shift = prev->second.scale_index - t.base.scale_index;
      EXPECT_GE(shift, 0);
      EXPECT_EQ(shift % kStepsPerOctave, 0);
      if (shift > 0) EXPECT_GT(prev->second.scale_index + t.interval.steps(), kToneCount - 1);
    } else {
      EXPECT_LE(t.base.scale_index, kHighestFirstBase);
    }
    degrees.insert(t.interval.degree());
    prev = t;
  }
  EXPECT_EQ(degrees.size(), 8u);
}

TEST(MusicProperty, SameSeedSameSequence) {
  TrialRng a(5), b(5);
  std::optional<Trial> pa, pb;
  for (int i = 0; i < 200; ++i) {
    pa = next_trial(pa, a, PhaseKind::PreTest);
    pb = next_trial(pb, b, PhaseKind::PreTest);
    EXPECT_EQ(pa->base, pb->base);
    EXPECT_EQ(pa->interval, pb->interval);
  }
}

TEST(Rng, UniformIntIsUnbiased) {
  TrialRng rng(2);
  std::array<int, 8> counts{};
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(1, 8) - 1];
  for (int c : counts) EXPECT_NEAR(c / double(n), 0.125, 0.006);
}

TEST(Rng, ForkedStreamsDiffer) {
  TrialRng base(9);
  auto a = base.fork(1), b = base.fork(2), c = base.fork(1);
  EXPECT_NE(a.next_u64(), b.next_u64());
  EXPECT_EQ(base.fork(1).next_u64(), c.next_u64());
}
