#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "purrfect/gateway/channel.hpp"

namespace purrfect::gateway {

struct ServerConfig {
  std::string address = "127.0.0.1";
  /// 0 picks a free port; see GatewayServer::port().
  unsigned short port = 8080;
  /// Trainer UI assets; empty disables static serving.
  std::filesystem::path static_dir;
  std::chrono::milliseconds tick_interval{20};
  /// Stop run() once the session has finished and the client has left.
  bool exit_when_done = true;
};

/// HTTP + websocket front end for one SessionChannel, running on a single
/// thread:
///   GET /health            status JSON
///   GET /audio/<id>.wav    server-rendered stimulus
///   GET /ws/session        websocket upgrade (one client at a time)
///   GET /<path>            static assets
class GatewayServer {
 public:
  /// Binds immediately. Errc::NetworkError if the address cannot be bound.
  GatewayServer(ServerConfig config, SessionChannel& channel);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  unsigned short port() const noexcept;

  /// Serves until stop() or, with exit_when_done, session completion.
  void run();
  /// Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace purrfect::gateway
