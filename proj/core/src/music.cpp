#include "purrfect/music.hpp"

#include <cmath>

#include "purrfect/error.hpp"

namespace purrfect {
namespace {

constexpr std::array<int, 7> kMajorOffsets = {0, 2, 4, 5, 7, 9, 11};
constexpr std::array<std::string_view, 12> kPitchNames = {
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};

std::array<ScaleTone, kToneCount> build_table() {
  std::array<ScaleTone, kToneCount> table{};
  for (int i = 0; i < kToneCount; ++i) {
    const int midi = kLowestMidi + 12 * (i / 7) + kMajorOffsets[i % 7];
    table[i] = ScaleTone{i, midi, midi_to_hz(midi)};
  }
  return table;
}

const std::array<ScaleTone, kToneCount>& table() {
  static const auto t = build_table();
  return t;
}

}  // namespace

Interval::Interval(int degree) : degree_(degree) {
  if (degree < 1 || degree > kMaxDegree) {
    throw Error(Errc::OutOfRange, "interval degree " + std::to_string(degree) + " not in 1..8");
  }
}

std::string_view to_string(PhaseKind kind) noexcept {
  switch (kind) {
    case PhaseKind::Questionnaire: return "Questionnaire";
    case PhaseKind::SpatialTest: return "SpatialTest";
    case PhaseKind::PreTest: return "PreTest";
    case PhaseKind::Training: return "Training";
    case PhaseKind::Break: return "Break";
    case PhaseKind::PostTest: return "PostTest";
  }
  return "Unknown";
}

PhaseKind phase_kind_from_string(std::string_view name) {
  for (auto kind : {PhaseKind::Questionnaire, PhaseKind::SpatialTest, PhaseKind::PreTest,
                    PhaseKind::Training, PhaseKind::Break, PhaseKind::PostTest}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(Errc::ParseError, "unknown phase '" + std::string(name) + "'");
}

double midi_to_hz(int midi) noexcept {
  return 440.0 * std::exp2((midi - 69) / 12.0);
}

ScaleTone tone_from_midi(int midi) {
  if (midi < kLowestMidi || midi > kHighestMidi) {
    throw Error(Errc::OutOfRange, "MIDI " + std::to_string(midi) + " outside 36..71");
  }
  const int pitch_class = midi % 12;
  for (int degree = 0; degree < 7; ++degree) {
    if (kMajorOffsets[degree] == pitch_class) {
      return table()[7 * ((midi - kLowestMidi) / 12) + degree];
    }
  }
  throw Error(Errc::NotDiatonic, note_name(midi) + " is not in C major");
}

ScaleTone tone_at(int scale_index) {
  if (scale_index < 0 || scale_index >= kToneCount) {
    throw Error(Errc::OutOfRange, "scale index " + std::to_string(scale_index) + " outside 0..20");
  }
  return table()[scale_index];
}

std::span<const ScaleTone, kToneCount> tone_table() { return table(); }

std::string note_name(int midi) {
  return std::string(kPitchNames[((midi % 12) + 12) % 12]) + std::to_string(midi / 12 - 1);
}

ScaleTone apply_interval(const ScaleTone& base, Interval interval) {
  const int target = base.scale_index + interval.steps();
  if (target >= kToneCount) {
    throw Error(Errc::RangeOverflow, note_name(base.midi) + " + degree " +
                                         std::to_string(interval.degree()) + " exceeds B4");
  }
  return table()[target];
}

Trial next_trial(const std::optional<Trial>& prev, TrialRng& rng, PhaseKind phase) {
  ScaleTone base;
  if (prev) {
    base = prev->second;
  } else {
    base = table()[rng.uniform_int(0, kHighestFirstBase)];
  }
  const Interval interval(rng.uniform_int(1, kMaxDegree));
  int index = base.scale_index;
  while (index + interval.steps() >= kToneCount) index -= kStepsPerOctave;
  base = table()[index];
  return Trial{prev ? prev->trial_index + 1 : 0, base, interval, apply_interval(base, interval),
               phase};
}

}  // namespace purrfect
