#include "purrfect/gateway/server.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "purrfect/error.hpp"

namespace purrfect::gateway {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string_view mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wav") return "audio/wav";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

/// Maps a URL path onto `root`, refusing anything that climbs out of it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root,
                                                    std::string_view target) {
  std::string path(target.substr(0, target.find('?')));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path.back() == '/') path += "index.html";
  const std::filesystem::path relative = std::filesystem::path(path).relative_path();
  for (const auto& part : relative) {
    if (part == ".." || part == ".") return std::nullopt;
  }
  return root / relative;
}

}  // namespace

struct GatewayServer::Impl {
  class WsSession;
  class HttpSession;

  Impl(ServerConfig cfg, SessionChannel& ch)
      : config(std::move(cfg)), channel(ch), acceptor(ioc), ticker(ioc),
        epoch(std::chrono::steady_clock::now()) {}

  std::int64_t now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 epoch)
        .count();
  }

  void listen() {
    beast::error_code ec;
    const auto address = asio::ip::make_address(config.address, ec);
    if (ec) throw Error(Errc::NetworkError, "invalid address " + config.address);
    const tcp::endpoint endpoint(address, config.port);
    auto fail = [&](const char* what) {
      throw Error(Errc::NetworkError, std::string("cannot ") + what + " " + config.address + ":" +
                                          std::to_string(config.port) + ": " + ec.message());
    };
    acceptor.open(endpoint.protocol(), ec);
    if (ec) fail("open");
    acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    acceptor.bind(endpoint, ec);
    if (ec) fail("bind");
    acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) fail("listen on");
  }

  void accept();
  void schedule_tick();
  void on_tick();
  void deliver(const std::vector<WireMessage>& messages);
  http::response<http::vector_body<std::uint8_t>> handle(const http::request<http::string_body>& req);

  ServerConfig config;
  SessionChannel& channel;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer ticker;
  std::chrono::steady_clock::time_point epoch;
  std::shared_ptr<WsSession> active;
};

class GatewayServer::Impl::WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(Impl& server, tcp::socket socket) : server_(server), ws_(std::move(socket)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }

  void close_after_flush() {
    closing_ = true;
    if (queue_.empty()) close();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    if (server_.active) {
      spdlog::warn("refusing second client");
      send(SessionChannel::error_message("another client is already attached", "SessionBusy").dump());
      close_after_flush();
      return;
    }
    try {
      const auto messages = server_.channel.connect(server_.now_ms());
      server_.active = shared_from_this();
      attached_ = true;
      for (const auto& m : messages) send(m.dump());
    } catch (const Error& e) {
      send(SessionChannel::error_message(e.what(), to_string(e.code())).dump());
      close_after_flush();
      return;
    }
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      detach();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      const auto messages = server_.channel.on_client_message(text, server_.now_ms());
      server_.deliver(messages);
    } catch (const Error& e) {
      spdlog::warn("closing client after {}: {}", to_string(e.code()), e.what());
      send(SessionChannel::error_message(e.what(), to_string(e.code())).dump());
      close_after_flush();
      detach();
      return;
    }
    read();
  }

  void detach() {
    if (!attached_) return;
    attached_ = false;
    server_.channel.disconnect(server_.now_ms());
    if (server_.active.get() == this) server_.active.reset();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      queue_.clear();
      detach();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      write_next();
    } else if (closing_) {
      close();
    }
  }

  void close() {
    if (close_started_) return;
    close_started_ = true;
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) { self->detach(); });
  }

  Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool attached_ = false;
  bool closing_ = false;
  bool close_started_ = false;
};

class GatewayServer::Impl::HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws/session") {
        stream_.expires_never();
        std::make_shared<WsSession>(server_, stream_.release_socket())->run(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::vector_body<std::uint8_t>>>(server_.handle(req_));
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec || !res->keep_alive()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->read();
                      });
  }

  Impl& server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void GatewayServer::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != asio::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      if (!acceptor.is_open()) return;
    } else {
      std::make_shared<HttpSession>(*this, std::move(socket))->run();
    }
    accept();
  });
}

void GatewayServer::Impl::schedule_tick() {
  ticker.expires_after(config.tick_interval);
  ticker.async_wait([this](beast::error_code ec) {
    if (!ec) on_tick();
  });
}

void GatewayServer::Impl::deliver(const std::vector<WireMessage>& messages) {
  if (!active) return;
  for (const auto& m : messages) active->send(m.dump());
  if (channel.finished()) active->close_after_flush();
}

void GatewayServer::Impl::on_tick() {
  try {
    deliver(channel.tick(now_ms()));
  } catch (const Error& e) {
    spdlog::error("session tick failed: {}", e.what());
  }
  if (config.exit_when_done && channel.finished() && !active) {
    ioc.stop();
    return;
  }
  schedule_tick();
}

http::response<http::vector_body<std::uint8_t>> GatewayServer::Impl::handle(
    const http::request<http::string_body>& req) {
  http::response<http::vector_body<std::uint8_t>> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::server, "purrfect-gateway");
  auto text = [&](http::status status, std::string_view type, const std::string& body) {
    res.result(status);
    res.set(http::field::content_type, std::string(type));
    res.body().assign(body.begin(), body.end());
  };
  const std::string target(req.target());
  if (req.method() != http::verb::get && req.method() != http::verb::head) {
    text(http::status::method_not_allowed, "text/plain", "method not allowed\n");
  } else if (target == "/health") {
    text(http::status::ok, "application/json", channel.status(now_ms()).dump() + "\n");
  } else if (target.rfind("/audio/", 0) == 0 && target.size() > 11 &&
             target.compare(target.size() - 4, 4, ".wav") == 0) {
    const std::string digits = target.substr(7, target.size() - 11);
    std::optional<std::vector<std::uint8_t>> wav;
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos &&
        digits.size() < 9) {
      wav = channel.stimulus_wav(std::stoi(digits));
    }
    if (wav) {
      res.result(http::status::ok);
      res.set(http::field::content_type, "audio/wav");
      res.body() = std::move(*wav);
    } else {
      text(http::status::not_found, "text/plain", "unknown stimulus\n");
    }
  } else if (const auto path = config.static_dir.empty()
                                   ? std::nullopt
                                   : resolve_static(config.static_dir, target);
             path && std::filesystem::is_regular_file(*path)) {
    std::ifstream in(*path, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    res.result(http::status::ok);
    res.set(http::field::content_type, std::string(mime_type(*path)));
    res.body() = std::move(bytes);
  } else {
    text(http::status::not_found, "text/plain", "not found\n");
  }
  res.prepare_payload();
  if (req.method() == http::verb::head) res.body().clear();
  return res;
}

GatewayServer::GatewayServer(ServerConfig config, SessionChannel& channel)
    : impl_(std::make_unique<Impl>(std::move(config), channel)) {
  impl_->listen();
}

GatewayServer::~GatewayServer() = default;

unsigned short GatewayServer::port() const noexcept {
  beast::error_code ec;
  const auto endpoint = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : endpoint.port();
}

void GatewayServer::run() {
  spdlog::info("gateway listening on {}:{}", impl_->config.address, port());
  impl_->accept();
  impl_->schedule_tick();
  impl_->ioc.run();
}

void GatewayServer::stop() { impl_->ioc.stop(); }

}  // namespace purrfect::gateway
