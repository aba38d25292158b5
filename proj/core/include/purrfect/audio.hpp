#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/music.hpp"

namespace purrfect {

struct StimulusTiming {
  int note_ms = 500;
  int gap_ms = 200;
  int ramp_ms = 10;

  /// Errc::InvalidTiming on negative fields or note_ms <= 2 * ramp_ms.
  void validate() const;

  int second_onset_ms() const noexcept { return note_ms + gap_ms; }
  int total_ms() const noexcept { return 2 * note_ms + gap_ms; }

  friend bool operator==(const StimulusTiming&, const StimulusTiming&) = default;
};

void to_json(nlohmann::json& j, const StimulusTiming& t);
void from_json(const nlohmann::json& j, StimulusTiming& t);

inline constexpr int kDefaultSampleRate = 44100;
inline constexpr double kDefaultAmplitude = 0.8;

struct PcmBuffer {
  int sample_rate_hz = kDefaultSampleRate;
  std::vector<std::int16_t> samples;
};

/// What a client needs to synthesize the stimulus itself.
struct StimulusDescriptor {
  double base_hz = 0.0;
  double second_hz = 0.0;
  int note_ms = 0;
  int gap_ms = 0;
  int ramp_ms = 0;
};

void to_json(nlohmann::json& j, const StimulusDescriptor& d);

StimulusDescriptor describe_stimulus(const Trial& trial, const StimulusTiming& timing);

/// Sample index at which a segment starting at `ms` begins.
std::size_t ms_to_samples(int ms, int sample_rate) noexcept;

/// Two ramped sine tones separated by exact digital silence.
///
/// Errc::InvalidTiming for bad timing, sample rates below 8 kHz or
/// amplitudes outside (0, 1].
PcmBuffer render_trial(const Trial& trial, const StimulusTiming& timing,
                       int sample_rate = kDefaultSampleRate,
                       double amplitude = kDefaultAmplitude);

/// RIFF/WAVE, PCM tag 1, 16-bit mono, little-endian, 44-byte header.
std::vector<std::uint8_t> encode_wav(const PcmBuffer& buffer);

/// Inverse of encode_wav. Accepts only the layout encode_wav produces
/// (Errc::ParseError otherwise).
PcmBuffer decode_wav(std::span<const std::uint8_t> bytes);

}  // namespace purrfect
