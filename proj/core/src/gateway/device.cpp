#include "purrfect/gateway/device.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <spdlog/spdlog.h>

#include "purrfect/error.hpp"

namespace purrfect::gateway {

void SimulatorChannel::send(std::int64_t time_ms, const HapticCommand& command) {
  std::lock_guard lock(mutex_);
  device_.feed(time_ms, encode_frame(command));
}

DeviceEventLog SimulatorChannel::log() const {
  std::lock_guard lock(mutex_);
  return device_.log();
}

StreamDeviceChannel::StreamDeviceChannel(const std::filesystem::path& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_NOCTTY | O_CLOEXEC | O_APPEND);
  if (fd_ < 0) {
    throw Error(Errc::NetworkError, "cannot open haptic device " + path.string() + ": " +
                                        std::strerror(errno));
  }
}

StreamDeviceChannel::~StreamDeviceChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void StreamDeviceChannel::send(std::int64_t time_ms, const HapticCommand& command) {
  const std::string frame = encode_frame(command);
  std::size_t done = 0;
  while (done < frame.size()) {
    const ssize_t n = ::write(fd_, frame.data() + done, frame.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::NetworkError, "write to " + path_.string() + " failed: " +
                                          std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  spdlog::debug("haptic t={} {}", time_ms, frame.substr(0, frame.size() - 1));
}

}  // namespace purrfect::gateway
