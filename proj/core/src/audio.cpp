#include "purrfect/audio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "purrfect/error.hpp"

namespace purrfect {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

bool has_tag(std::span<const std::uint8_t> b, std::size_t at, std::string_view tag) {
  return std::equal(tag.begin(), tag.end(), b.begin() + static_cast<std::ptrdiff_t>(at));
}

void write_tone(std::span<std::int16_t> out, double freq, int sample_rate, std::size_t ramp,
                double amplitude) {
  const std::size_t n = out.size();
  const double omega = 2.0 * std::numbers::pi * freq / sample_rate;
  for (std::size_t k = 0; k < n; ++k) {
    double env = 1.0;
    if (ramp > 0) {
      env = std::min({1.0, static_cast<double>(k) / ramp, static_cast<double>(n - k) / ramp});
    }
    const double v = amplitude * env * std::sin(omega * static_cast<double>(k));
    out[k] = static_cast<std::int16_t>(std::lround(v * 32767.0));
  }
}

}  // namespace

void StimulusTiming::validate() const {
  if (note_ms < 0 || gap_ms < 0 || ramp_ms < 0) {
    throw Error(Errc::InvalidTiming, "timing values must be non-negative");
  }
  if (note_ms <= 2 * ramp_ms) {
    throw Error(Errc::InvalidTiming, "note_ms must exceed twice ramp_ms");
  }
}

void to_json(nlohmann::json& j, const StimulusTiming& t) {
  j = {{"note_ms", t.note_ms}, {"gap_ms", t.gap_ms}, {"ramp_ms", t.ramp_ms}};
}

void from_json(const nlohmann::json& j, StimulusTiming& t) {
  t.note_ms = j.value("note_ms", 500);
  t.gap_ms = j.value("gap_ms", 200);
  t.ramp_ms = j.value("ramp_ms", 10);
}

void to_json(nlohmann::json& j, const StimulusDescriptor& d) {
  j = {{"base_hz", d.base_hz}, {"second_hz", d.second_hz}, {"note_ms", d.note_ms},
       {"gap_ms", d.gap_ms},   {"ramp_ms", d.ramp_ms}};
}

StimulusDescriptor describe_stimulus(const Trial& trial, const StimulusTiming& timing) {
  return {trial.base.frequency_hz, trial.second.frequency_hz, timing.note_ms, timing.gap_ms,
          timing.ramp_ms};
}

std::size_t ms_to_samples(int ms, int sample_rate) noexcept {
  return static_cast<std::size_t>(std::llround(static_cast<double>(sample_rate) * ms / 1000.0));
}

PcmBuffer render_trial(const Trial& trial, const StimulusTiming& timing, int sample_rate,
                       double amplitude) {
  timing.validate();
  if (sample_rate < 8000) {
    throw Error(Errc::InvalidTiming, "sample rate " + std::to_string(sample_rate) + " below 8000");
  }
  if (!(amplitude > 0.0 && amplitude <= 1.0)) {
    throw Error(Errc::InvalidTiming, "amplitude must be in (0, 1]");
  }
  const std::size_t note = ms_to_samples(timing.note_ms, sample_rate);
  const std::size_t onset2 = ms_to_samples(timing.second_onset_ms(), sample_rate);
  const std::size_t total = ms_to_samples(timing.total_ms(), sample_rate);
  const std::size_t ramp = ms_to_samples(timing.ramp_ms, sample_rate);

  PcmBuffer buffer;
  buffer.sample_rate_hz = sample_rate;
  buffer.samples.assign(total, 0);
  std::span<std::int16_t> all(buffer.samples);
  write_tone(all.subspan(0, std::min(note, onset2)), trial.base.frequency_hz, sample_rate, ramp,
             amplitude);
  write_tone(all.subspan(onset2, total - onset2), trial.second.frequency_hz, sample_rate, ramp,
             amplitude);
  return buffer;
}

std::vector<std::uint8_t> encode_wav(const PcmBuffer& buffer) {
  const auto data_bytes = static_cast<std::uint32_t>(buffer.samples.size() * 2);
  const auto rate = static_cast<std::uint32_t>(buffer.sample_rate_hz);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);         // PCM
  put_u16(out, 1);         // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : buffer.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

PcmBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 44 || !has_tag(bytes, 0, "RIFF") || !has_tag(bytes, 8, "WAVE") ||
      !has_tag(bytes, 12, "fmt ") || !has_tag(bytes, 36, "data")) {
    throw Error(Errc::ParseError, "not a canonical RIFF/WAVE file");
  }
  if (get_u16(bytes, 20) != 1 || get_u16(bytes, 22) != 1 || get_u16(bytes, 34) != 16) {
    throw Error(Errc::ParseError, "only 16-bit mono PCM is supported");
  }
  const std::uint32_t data_bytes = get_u32(bytes, 40);
  if (data_bytes % 2 != 0 || bytes.size() < 44 + static_cast<std::size_t>(data_bytes)) {
    throw Error(Errc::ParseError, "truncated data chunk");
  }
  PcmBuffer buffer;
  buffer.sample_rate_hz = static_cast<int>(get_u32(bytes, 24));
  buffer.samples.resize(data_bytes / 2);
  for (std::size_t i = 0; i < buffer.samples.size(); ++i) {
    buffer.samples[i] = static_cast<std::int16_t>(get_u16(bytes, 44 + 2 * i));
  }
  return buffer;
}

}  // namespace purrfect
