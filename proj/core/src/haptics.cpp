#include "purrfect/haptics.hpp"

#include <charconv>
#include <limits>
#include <sstream>

#include "purrfect/error.hpp"

namespace purrfect {
namespace {

bool parse_int(std::string_view token, int& out) {
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = s.find(' ', i);
    if (j == std::string_view::npos) j = s.size();
    parts.push_back(s.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace

void to_json(nlohmann::json& j, const HapticCommand& c) {
  j = {{"module", c.module}, {"intensity", c.intensity}, {"duration_ms", c.duration_ms},
       {"onset_ms", c.onset_ms}};
}

std::vector<HapticCommand> schedule_for_pair(int module, const StimulusTiming& timing,
                                             int intensity) {
  if (module < 1 || module > kModuleCount) {
    throw Error(Errc::ModuleOutOfRange, "module " + std::to_string(module));
  }
  return {HapticCommand{1, intensity, timing.note_ms, 0},
          HapticCommand{module, intensity, timing.note_ms, timing.second_onset_ms()}};
}

std::vector<HapticCommand> schedule_for_trial(const Trial& trial, const StimulusTiming& timing,
                                              int intensity) {
  return schedule_for_pair(trial.interval.degree(), timing, intensity);
}

std::string encode_frame(const HapticCommand& cmd) {
  return "VIB " + std::to_string(cmd.module) + " " + std::to_string(cmd.intensity) + " " +
         std::to_string(cmd.duration_ms) + "\n";
}

HapticCommand decode_frame(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto parts = split_spaces(line);
  HapticCommand cmd;
  if (parts.size() != 4 || parts[0] != "VIB" || !parse_int(parts[1], cmd.module) ||
      !parse_int(parts[2], cmd.intensity) || !parse_int(parts[3], cmd.duration_ms)) {
    throw Error(Errc::MalformedFrame, "'" + std::string(line) + "'");
  }
  if (cmd.module < 1 || cmd.module > kModuleCount) {
    throw Error(Errc::ModuleOutOfRange, "module " + std::to_string(cmd.module) + " not in 1..8");
  }
  if (cmd.intensity < 0 || cmd.intensity > 255 || cmd.duration_ms <= 0) {
    throw Error(Errc::MalformedFrame, "intensity or duration out of range: '" +
                                          std::string(line) + "'");
  }
  cmd.onset_ms = 0;
  return cmd;
}

std::string DeviceEventLog::to_json_lines() const {
  std::ostringstream out;
  for (const auto& e : entries) {
    nlohmann::json j{{"receive_time_ms", e.receive_time_ms}};
    if (e.command) {
      j["module"] = e.command->module;
      j["intensity"] = e.command->intensity;
      j["duration_ms"] = e.command->duration_ms;
    } else {
      j["error"] = e.error;
      j["raw"] = e.raw;
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

void SimulatedDevice::feed(std::int64_t time_ms, std::string_view bytes) {
  pending_.append(bytes);
  std::size_t nl;
  while ((nl = pending_.find('\n')) != std::string::npos) {
    accept_line(time_ms, pending_.substr(0, nl));
    pending_.erase(0, nl + 1);
  }
}

void SimulatedDevice::accept_line(std::int64_t time_ms, const std::string& line) {
  DeviceEvent event;
  event.receive_time_ms = time_ms;
  event.raw = line;
  try {
    event.command = decode_frame(line);
  } catch (const Error& e) {
    event.error = e.what();
  }
  log_.entries.push_back(std::move(event));
}

DeviceEventLog simulated_device(std::span<const TimedFrame> frames) {
  SimulatedDevice device;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& frame : frames) {
    if (frame.time_ms < last) {
      throw Error(Errc::ValidationError, "frames out of time order at t=" + std::to_string(frame.time_ms));
    }
    last = frame.time_ms;
    device.feed(frame.time_ms, frame.bytes);
  }
  return device.log();
}

}  // namespace purrfect
