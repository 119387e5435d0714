#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "socialarm/harness.hpp"

namespace socialarm {

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity FIFO that drops its oldest element when full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Returns true if an element was dropped to make room.
  bool push(T value) {
    std::lock_guard lock(mu_);
    bool dropped = false;
    if (items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
      dropped = true;
    }
    items_.push_back(std::move(value));
    cv_.notify_one();
    return dropped;
  }

  /// Blocks until an element is available or the queue is closed and empty.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  int max_sessions = 8;
  std::size_t outbox_capacity = 8;
  EngineSettings engine;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(const std::string& client_key);

/// Splits "host:port"; throws ValidationError("addr", ...) when malformed.
std::pair<std::string, int> parse_address(const std::string& addr);

/// TCP server speaking newline-delimited JSON, or WebSocket text frames when
/// the connection opens with an HTTP upgrade request. Each connection gets
/// its own LiveSession ticking in wall-clock time.
class Server {
 public:
  /// Binds and listens immediately; throws BindError on failure.
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }

  /// Serves until stop() is called or `should_stop` returns true (polled
  /// every 100 ms), then closes all sessions and returns.
  void run(const std::function<bool()>& should_stop = {});
  void stop() { stop_.store(true); }

  int active_sessions() const { return active_.load(); }

 private:
  struct Connection;
  void serve_connection(const std::shared_ptr<Connection>& conn);
  void reap(bool all);

  ServerConfig config_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<int> active_{0};
  int next_session_id_ = 1;
  std::mutex conns_mu_;
  std::list<std::pair<std::shared_ptr<Connection>, std::thread>> conns_;
};

}  // namespace socialarm
