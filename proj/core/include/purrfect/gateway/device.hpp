#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include "purrfect/haptics.hpp"

namespace purrfect::gateway {

/// Destination for haptic frames. Writes are issued in order from the
/// gateway's single event loop.
class DeviceChannel {
 public:
  virtual ~DeviceChannel() = default;
  virtual void send(std::int64_t time_ms, const HapticCommand& command) = 0;
};

/// Feeds encoded frames into a SimulatedDevice and keeps its event log.
class SimulatorChannel final : public DeviceChannel {
 public:
  void send(std::int64_t time_ms, const HapticCommand& command) override;

  /// Snapshot of what the simulated vest has received so far.
  DeviceEventLog log() const;

 private:
  mutable std::mutex mutex_;
  SimulatedDevice device_;
};

/// Writes encoded frames to a character device or file (for example a
/// Bluetooth serial port). Errc::NetworkError when it cannot be opened or
/// a write fails.
class StreamDeviceChannel final : public DeviceChannel {
 public:
  explicit StreamDeviceChannel(const std::filesystem::path& path);
  ~StreamDeviceChannel() override;

  StreamDeviceChannel(const StreamDeviceChannel&) = delete;
  StreamDeviceChannel& operator=(const StreamDeviceChannel&) = delete;

  void send(std::int64_t time_ms, const HapticCommand& command) override;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace purrfect::gateway
