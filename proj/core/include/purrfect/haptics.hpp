#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "purrfect/audio.hpp"
#include "purrfect/music.hpp"

namespace purrfect {

inline constexpr int kModuleCount = 8;
inline constexpr int kDefaultIntensity = 200;

/// One vibration on one module of the spinal array. Module 1 sits at the
/// lower back, module 8 near the neck. onset_ms is relative to stimulus start
/// and is realized by when the frame is sent; it is not part of the wire frame.
struct HapticCommand {
  int module = 1;
  int intensity = kDefaultIntensity;
  int duration_ms = 500;
  int onset_ms = 0;

  friend bool operator==(const HapticCommand&, const HapticCommand&) = default;
};

void to_json(nlohmann::json& j, const HapticCommand& c);

struct ArrayGeometry {
  int module_count = kModuleCount;
  double spacing_cm = 3.0;
  double total_length_cm = 75.0;

  /// Distance between module 1 and `module` along the spine.
  double offset_cm(int module) const { return (module - 1) * spacing_cm; }
};

/// Vibration pair for an interval trial: module 1 with the first tone, module
/// `degree` with the second, both for note_ms at the same intensity.
std::vector<HapticCommand> schedule_for_trial(const Trial& trial, const StimulusTiming& timing,
                                              int intensity = kDefaultIntensity);

/// Same pair shape for the haptic-only spatial test, targeting `module`.
std::vector<HapticCommand> schedule_for_pair(int module, const StimulusTiming& timing,
                                             int intensity = kDefaultIntensity);

/// "VIB <module> <intensity> <duration_ms>\n".
std::string encode_frame(const HapticCommand& cmd);

/// Parses one line, with or without the trailing newline. Errc::ModuleOutOfRange
/// for modules outside 1..8, Errc::MalformedFrame for anything else invalid.
/// The decoded command has onset_ms = 0.
HapticCommand decode_frame(std::string_view line);

struct TimedFrame {
  std::int64_t time_ms = 0;
  std::string bytes;
};

struct DeviceEvent {
  std::int64_t receive_time_ms = 0;
  std::optional<HapticCommand> command;
  std::string error;
  std::string raw;

  bool ok() const noexcept { return command.has_value(); }
};

struct DeviceEventLog {
  std::vector<DeviceEvent> entries;

  /// One JSON object per line.
  std::string to_json_lines() const;
};

/// Byte-stream endpoint standing in for the vest firmware. Bytes may arrive
/// split across writes; each completed line becomes one log entry, malformed
/// lines become error entries and the stream continues.
class SimulatedDevice {
 public:
  void feed(std::int64_t time_ms, std::string_view bytes);

  const DeviceEventLog& log() const noexcept { return log_; }

 private:
  void accept_line(std::int64_t time_ms, const std::string& line);

  std::string pending_;
  DeviceEventLog log_;
};

/// Runs a timed frame stream through a fresh SimulatedDevice. Frames must be
/// in non-decreasing time order.
DeviceEventLog simulated_device(std::span<const TimedFrame> frames);

}  // namespace purrfect
