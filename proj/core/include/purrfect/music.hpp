#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "purrfect/rng.hpp"

namespace purrfect {

// C-major material from C2 (MIDI 36) to B4 (MIDI 71): 7 degrees x 3 octaves.
inline constexpr int kToneCount = 21;
inline constexpr int kLowestMidi = 36;
inline constexpr int kHighestMidi = 71;
inline constexpr int kStepsPerOctave = 7;
inline constexpr int kMaxDegree = 8;
// A first tone at or below this index admits every interval up to the octave.
inline constexpr int kHighestFirstBase = kToneCount - kMaxDegree;

struct ScaleTone {
  int scale_index = 0;
  int midi = kLowestMidi;
  double frequency_hz = 0.0;

  friend bool operator==(const ScaleTone& a, const ScaleTone& b) {
    return a.scale_index == b.scale_index && a.midi == b.midi;
  }
};

/// Inclusive diatonic degree: 1 is unison, 4 is C->F, 8 is the octave.
class Interval {
 public:
  /// Throws Errc::OutOfRange unless 1 <= degree <= 8.
  explicit Interval(int degree);

  int degree() const noexcept { return degree_; }
  int steps() const noexcept { return degree_ - 1; }

  friend bool operator==(Interval, Interval) = default;

 private:
  int degree_;
};

enum class PhaseKind { Questionnaire, SpatialTest, PreTest, Training, Break, PostTest };

std::string_view to_string(PhaseKind kind) noexcept;
PhaseKind phase_kind_from_string(std::string_view name);

struct Trial {
  int trial_index = 0;
  ScaleTone base;
  Interval interval{1};
  ScaleTone second;
  PhaseKind phase = PhaseKind::Training;
};

/// Equal temperament, A4 = 440 Hz.
double midi_to_hz(int midi) noexcept;

/// Errc::OutOfRange outside 36..71, Errc::NotDiatonic for black keys.
ScaleTone tone_from_midi(int midi);

/// Errc::OutOfRange outside 0..20.
ScaleTone tone_at(int scale_index);

std::span<const ScaleTone, kToneCount> tone_table();

/// "C2", "F#4" style name.
std::string note_name(int midi);

/// Tone interval.steps() scale steps above base; Errc::RangeOverflow past B4.
ScaleTone apply_interval(const ScaleTone& base, Interval interval);

/// Draws the next trial of a chained sequence.
///
/// Without a predecessor the base is uniform over C2..B3 so that all eight
/// intervals fit. Otherwise the base is the predecessor's second tone, moved
/// down whole octaves until the drawn interval stays at or below B4. Draw
/// order is base (first trial only) then degree.
Trial next_trial(const std::optional<Trial>& prev, TrialRng& rng, PhaseKind phase);

}  // namespace purrfect
