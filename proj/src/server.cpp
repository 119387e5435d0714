#include "socialarm/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>

#include "socialarm/errors.hpp"
#include "socialarm/protocol.hpp"

namespace socialarm {

namespace {

constexpr std::size_t kMaxMessageBytes = 1 << 20;
constexpr int kMaxCatchUpTicks = 3;
constexpr int kPollMs = 100;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string websocket_accept_key(const std::string& client_key) {
  const std::string input = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_Digest(input.data(), input.size(), digest, &digest_len, EVP_sha1(), nullptr);
  unsigned char out[4 * ((EVP_MAX_MD_SIZE + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, static_cast<int>(digest_len));
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

std::pair<std::string, int> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw ValidationError("addr", "expected host:port, got \"" + addr + "\"");
  }
  const std::string port_text = addr.substr(colon + 1);
  if (!std::all_of(port_text.begin(), port_text.end(), [](unsigned char c) { return std::isdigit(c); }) ||
      port_text.size() > 5) {
    throw ValidationError("addr", "invalid port \"" + port_text + "\"");
  }
  const int port = std::stoi(port_text);
  if (port > 65535) throw ValidationError("addr", "invalid port \"" + port_text + "\"");
  return {addr.substr(0, colon), port};
}

struct Server::Connection {
  int fd = -1;
  bool websocket = false;
  std::string rbuf;
  std::mutex write_mu;
  std::atomic<bool> stop{false};
  std::atomic<bool> done{false};
  const std::atomic<bool>* server_stop = nullptr;

  bool stopping() const { return stop.load() || server_stop->load(); }

  /// Appends whatever is available; false on EOF, error or stop.
  bool fill() {
    char buf[4096];
    while (!stopping()) {
      pollfd p{fd, POLLIN, 0};
      const int r = ::poll(&p, 1, kPollMs);
      if (r < 0 && errno == EINTR) continue;
      if (r < 0) return false;
      if (r == 0) continue;
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
      if (n <= 0) return false;
      rbuf.append(buf, static_cast<std::size_t>(n));
      return rbuf.size() <= kMaxMessageBytes + 16;
    }
    return false;
  }

  std::optional<std::string> read_line() {
    for (;;) {
      const auto nl = rbuf.find('\n');
      if (nl != std::string::npos) {
        std::string line = rbuf.substr(0, nl);
        rbuf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (!fill()) return std::nullopt;
    }
  }

  bool write_raw(const std::string& data) {
    std::lock_guard lock(write_mu);
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  static std::string frame(unsigned char opcode, const std::string& payload) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | opcode));
    const std::uint64_t len = payload.size();
    if (len < 126) {
      f.push_back(static_cast<char>(len));
    } else if (len <= 0xFFFF) {
      f.push_back(static_cast<char>(126));
      f.push_back(static_cast<char>((len >> 8) & 0xFF));
      f.push_back(static_cast<char>(len & 0xFF));
    } else {
      f.push_back(static_cast<char>(127));
      for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
    }
    return f + payload;
  }

  bool send_message(const std::string& text) {
    return websocket ? write_raw(frame(0x1, text)) : write_raw(text + "\n");
  }

  /// Next complete text message from WebSocket frames. Handles ping and
  /// close control frames and reassembles fragments.
  std::optional<std::string> read_ws_message() {
    std::string message;
    for (;;) {
      std::size_t need = 2;
      while (rbuf.size() < need) {
        if (!fill()) return std::nullopt;
      }
      const auto b0 = static_cast<unsigned char>(rbuf[0]);
      const auto b1 = static_cast<unsigned char>(rbuf[1]);
      const bool fin = b0 & 0x80;
      const unsigned opcode = b0 & 0x0F;
      const bool masked = b1 & 0x80;
      std::uint64_t len = b1 & 0x7F;
      std::size_t header = 2;
      if (len == 126) header += 2;
      if (len == 127) header += 8;
      if (masked) header += 4;
      while (rbuf.size() < header) {
        if (!fill()) return std::nullopt;
      }
      if (len == 126) {
        len = (static_cast<std::uint64_t>(static_cast<unsigned char>(rbuf[2])) << 8) |
              static_cast<unsigned char>(rbuf[3]);
      } else if (len == 127) {
        len = 0;
        for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(rbuf[2 + i]);
      }
      if (len > kMaxMessageBytes) return std::nullopt;
      while (rbuf.size() < header + len) {
        if (!fill()) return std::nullopt;
      }
      std::string payload = rbuf.substr(header, len);
      if (masked) {
        const std::size_t mk = header - 4;
        for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= rbuf[mk + (i % 4)];
      }
      rbuf.erase(0, header + len);

      if (opcode == 0x8) {
        write_raw(frame(0x8, payload.substr(0, 2)));
        return std::nullopt;
      }
      if (opcode == 0x9) {
        write_raw(frame(0xA, payload));
        continue;
      }
      if (opcode == 0xA) continue;
      message += payload;
      if (message.size() > kMaxMessageBytes) return std::nullopt;
      if (fin) return message;
    }
  }

  std::optional<std::string> read_message() { return websocket ? read_ws_message() : read_line(); }

  /// Reads the HTTP upgrade request (first line already consumed) and
  /// answers it. False if the request is not a valid upgrade.
  bool accept_upgrade() {
    std::string key;
    for (;;) {
      auto line = read_line();
      if (!line) return false;
      if (line->empty()) break;
      const auto colon = line->find(':');
      if (colon == std::string::npos) continue;
      if (lower(trim(line->substr(0, colon))) == "sec-websocket-key") key = trim(line->substr(colon + 1));
    }
    if (key.empty()) {
      write_raw("HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
      return false;
    }
    websocket = true;
    return write_raw("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                     "Sec-WebSocket-Accept: " +
                     websocket_accept_key(key) + "\r\n\r\n");
  }
};

Server::Server(ServerConfig config) : config_(std::move(config)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(config_.port);
  if (const int rc = ::getaddrinfo(config_.host.c_str(), port_text.c_str(), &hints, &res); rc != 0) {
    throw BindError("cannot resolve " + config_.host + ": " + ::gai_strerror(rc));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw BindError(std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw BindError("cannot listen on " + config_.host + ":" + port_text + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Server::~Server() {
  stop_.store(true);
  reap(true);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::reap(bool all) {
  std::lock_guard lock(conns_mu_);
  for (auto it = conns_.begin(); it != conns_.end();) {
    if (all) it->first->stop.store(true);
    if (all || it->first->done.load()) {
      if (it->second.joinable()) it->second.join();
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void Server::run(const std::function<bool()>& should_stop) {
  while (!stop_.load()) {
    if (should_stop && should_stop()) break;
    pollfd p{listen_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, kPollMs);
    reap(false);
    if (r <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    conn->server_stop = &stop_;
    std::lock_guard lock(conns_mu_);
    conns_.emplace_back(conn, std::thread([this, conn] { serve_connection(conn); }));
  }
  stop_.store(true);
  reap(true);
}

void Server::serve_connection(const std::shared_ptr<Connection>& conn) {
  auto finish = [&] {
    ::shutdown(conn->fd, SHUT_RDWR);
    ::close(conn->fd);
    conn->done.store(true);
  };

  auto first = conn->read_line();
  if (first && first->rfind("GET ", 0) == 0) {
    if (!conn->accept_upgrade()) return finish();
    first = conn->read_message();
  }
  if (!first) return finish();

  auto reject = [&](const ProtocolError& e) {
    conn->send_message(error_message(-1, e).dump());
    if (conn->websocket) conn->write_raw(Connection::frame(0x8, std::string("\x03\xe8", 2)));
    finish();
  };

  nlohmann::json hello;
  try {
    hello = nlohmann::json::parse(*first);
  } catch (const nlohmann::json::parse_error&) {
    return reject({"", "invalid JSON"});
  }
  if (auto err = check_hello(hello)) return reject(*err);

  if (active_.fetch_add(1) >= config_.max_sessions) {
    active_.fetch_sub(1);
    return reject({"", "session limit reached"});
  }

  int session_id;
  {
    std::lock_guard lock(conns_mu_);
    session_id = next_session_id_++;
  }
  LiveSession session(config_.engine, session_id);
  BoundedQueue<std::string> outbox(config_.outbox_capacity);
  conn->send_message(session.welcome().dump());

  std::thread writer([&] {
    while (auto msg = outbox.pop()) {
      if (!conn->send_message(*msg)) {
        conn->stop.store(true);
        break;
      }
    }
  });
  std::thread reader([&] {
    while (auto msg = conn->read_message()) {
      if (auto reply = session.submit(*msg)) outbox.push(reply->dump());
    }
    conn->stop.store(true);
  });

  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(session.dt()));
  auto next = clock::now();
  while (!conn->stopping()) {
    const auto now = clock::now();
    int ran = 0;
    while (next <= now && ran < kMaxCatchUpTicks) {
      for (auto& m : session.tick()) outbox.push(m.dump());
      next += period;
      ++ran;
    }
    if (next <= now) next = now + period;
    std::this_thread::sleep_until(std::min(next, now + std::chrono::milliseconds(kPollMs)));
  }

  conn->stop.store(true);
  ::shutdown(conn->fd, SHUT_RD);
  reader.join();
  outbox.close();
  writer.join();
  if (conn->websocket) conn->write_raw(Connection::frame(0x8, std::string("\x03\xe9", 2)));
  active_.fetch_sub(1);
  finish();
}

}  // namespace socialarm
