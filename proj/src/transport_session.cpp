#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "fedppi/error.hpp"
#include "fedppi/transport.hpp"

namespace fedppi::transport {
namespace {

[[noreturn]] void io_fail(const std::string& what) {
  fail(ErrorCategory::kIo, what + ": " + std::strerror(errno));
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - Clock::now());
  return static_cast<int>(std::max<long long>(0, left.count()));
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void set_nonblocking(int fd, bool on) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

}  // namespace

// ---------------------------------------------------------- Connection

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Connection::~Connection() { close(); }

void Connection::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

Connection Connection::connect(const std::string& host, std::uint16_t port,
                               std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found);
      rc != 0) {
    fail(ErrorCategory::kIo,
         "cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found,
                                                            &::freeaddrinfo);
  // Retry until the deadline so a client may start before its coordinator.
  std::string last_error = "no address";
  while (true) {
    for (addrinfo* a = list.get(); a; a = a->ai_next) {
      Connection c(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
      if (!c.valid()) continue;
      set_nonblocking(c.fd(), true);
      int rc = ::connect(c.fd(), a->ai_addr, a->ai_addrlen);
      if (rc != 0 && errno == EINPROGRESS) {
        pollfd p{c.fd(), POLLOUT, 0};
        if (::poll(&p, 1, remaining_ms(deadline)) == 1) {
          int err = 0;
          socklen_t len = sizeof err;
          ::getsockopt(c.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
          errno = err;
          rc = err == 0 ? 0 : -1;
        } else {
          errno = ETIMEDOUT;
        }
      }
      if (rc == 0) {
        set_nonblocking(c.fd(), false);
        const int one = 1;
        ::setsockopt(c.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return c;
      }
      last_error = std::strerror(errno);
    }
    if (Clock::now() >= deadline) break;
    ::poll(nullptr, 0, 50);
  }
  fail(ErrorCategory::kTimeout, "cannot connect to " + host + ":" + service +
                                    " before the deadline (" + last_error + ")");
}

void Connection::send_bytes(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n =
        ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd p{fd_, POLLOUT, 0};
        ::poll(&p, 1, 1000);
        continue;
      }
      io_fail("send failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Connection::send(const Message& message) {
  const auto bytes = encode(message);
  send_bytes(transport::frame(bytes));
}

std::vector<std::uint8_t> Connection::receive_frame(Clock::time_point deadline) {
  const auto read_exact = [&](std::uint8_t* out, std::size_t count) {
    std::size_t got = 0;
    while (got < count) {
      pollfd p{fd_, POLLIN, 0};
      const int ready = ::poll(&p, 1, remaining_ms(deadline));
      if (ready == 0) fail(ErrorCategory::kTimeout, "no reply before the deadline");
      if (ready < 0) {
        if (errno == EINTR) continue;
        io_fail("poll failed");
      }
      const ssize_t n = ::recv(fd_, out + got, count - got, 0);
      if (n == 0) fail(ErrorCategory::kProtocol, "peer closed the connection");
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        io_fail("receive failed");
      }
      got += static_cast<std::size_t>(n);
    }
  };
  std::uint8_t prefix[4];
  read_exact(prefix, 4);
  const std::uint32_t length = read_be32(prefix);
  if (length > kMaxFrameBytes) {
    throw DecodeError(DecodeFailure::kMalformed,
                      "frame length " + std::to_string(length) +
                          " exceeds the limit");
  }
  std::vector<std::uint8_t> bytes(length);
  read_exact(bytes.data(), length);
  return bytes;
}

Message Connection::receive(Clock::time_point deadline) {
  return decode(receive_frame(deadline));
}

// ------------------------------------------------------------ Listener

Listener::Listener(Listener&& other) noexcept
    : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

Listener& Listener::operator=(Listener&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Listener Listener::bind(const std::string& host, std::uint16_t port) {
  Listener l;
  l.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (l.fd_ < 0) io_fail("socket failed");
  const int one = 1;
  ::setsockopt(l.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string bind_host = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
    fail(ErrorCategory::kValidation, "listen host must be an IPv4 address: '" +
                                         host + "'");
  }
  if (::bind(l.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    io_fail("cannot bind " + bind_host + ":" + std::to_string(port));
  }
  if (::listen(l.fd_, 64) != 0) io_fail("listen failed");
  socklen_t len = sizeof addr;
  ::getsockname(l.fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  l.port_ = ntohs(addr.sin_port);
  set_nonblocking(l.fd_, true);
  return l;
}

// ------------------------------------------------------------- session

void SessionConfig::validate() const {
  require(expected_clients >= 1, "session needs at least one client");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(timeout.count() > 0, "session timeout must be positive");
  require(expected_client_ids.empty() ||
              expected_client_ids.size() == expected_clients,
          "expected client ids must list exactly K ids");
}

namespace {

struct Peer {
  Connection conn;
  std::vector<std::uint8_t> buffer;
  std::string client_id;  // set once the peer has been accepted
  bool closed = false;
};

class Coordinator {
 public:
  Coordinator(const SessionConfig& config, Listener& listener)
      : config_(config), listener_(listener) {}

  SessionOutcome run() {
    const auto start = Clock::now();
    const auto deadline = start + config_.timeout;
    grid_round_ = is_grid_task(config_.task);
    try {
      while (summaries_.size() < config_.expected_clients) {
        poll_once(deadline);
      }
    } catch (const Error& e) {
      broadcast(ErrorMessage{ProtocolCode::kSessionFailed, e.what()});
      throw;
    }
    SessionOutcome outcome = finish();
    outcome.elapsed = Clock::now() - start;
    return outcome;
  }

 private:
  void poll_once(Clock::time_point deadline) {
    std::vector<pollfd> fds;
    fds.push_back({listener_.fd(), POLLIN, 0});
    for (const auto& p : peers_) fds.push_back({p->conn.fd(), POLLIN, 0});
    const int wait = remaining_ms(deadline);
    const int ready = wait > 0 ? ::poll(fds.data(), fds.size(), wait) : 0;
    if (ready < 0) {
      if (errno == EINTR) return;
      io_fail("poll failed");
    }
    if (ready == 0) timeout();
    if (fds[0].revents & POLLIN) accept_all();
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) read_peer(*peers_[i - 1]);
    }
    std::erase_if(peers_, [](const auto& p) { return p->closed; });
  }

  void accept_all() {
    while (true) {
      const int fd = ::accept(listener_.fd(), nullptr, nullptr);
      if (fd < 0) return;
      auto peer = std::make_unique<Peer>();
      peer->conn = Connection(fd);
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      peers_.push_back(std::move(peer));
    }
  }

  void read_peer(Peer& peer) {
    std::uint8_t chunk[65536];
    const ssize_t n = ::recv(peer.conn.fd(), chunk, sizeof chunk, MSG_DONTWAIT);
    if (n < 0 && (errno == EAGAIN || errno == EINTR)) return;
    if (n <= 0) {
      peer.closed = true;
      if (!peer.client_id.empty()) {
        fail(ErrorCategory::kProtocol, "client '" + peer.client_id +
                                           "' disconnected before the session "
                                           "finished");
      }
      return;
    }
    peer.buffer.insert(peer.buffer.end(), chunk, chunk + n);
    while (!peer.closed && peer.buffer.size() >= 4) {
      const std::uint32_t length = read_be32(peer.buffer.data());
      if (length > kMaxFrameBytes) {
        reject(peer, ProtocolCode::kBadFrame, "frame length exceeds the limit");
        drop(peer);
        return;
      }
      if (peer.buffer.size() < 4 + std::size_t{length}) return;
      std::vector<std::uint8_t> bytes(peer.buffer.begin() + 4,
                                      peer.buffer.begin() + 4 + length);
      peer.buffer.erase(peer.buffer.begin(), peer.buffer.begin() + 4 + length);
      handle(peer, bytes);
    }
  }

  void handle(Peer& peer, const std::vector<std::uint8_t>& bytes) {
    Message message;
    try {
      message = decode(bytes);
    } catch (const DecodeError& e) {
      reject(peer, ProtocolCode::kBadFrame, e.what());
      return;
    }
    if (auto* r = std::get_if<RangeReport>(&message)) {
      on_range(peer, std::move(*r));
    } else if (auto* s = std::get_if<SummaryMessage>(&message)) {
      on_summary(peer, std::move(*s));
    } else {
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "coordinator only accepts range reports and summaries");
    }
  }

  bool check_header(Peer& peer, const std::string& session, TaskKind task) {
    if (session != config_.session_id) {
      reject(peer, ProtocolCode::kWrongSession,
             "session '" + session + "' is not '" + config_.session_id + "'");
      return false;
    }
    if (task != config_.task) {
      reject(peer, ProtocolCode::kWrongTask,
             "task " + std::string(to_string(task)) +
                 " does not match session task " +
                 std::string(to_string(config_.task)));
      return false;
    }
    return true;
  }

  // Binds a client id to the connection. Returns false (and disconnects) on a
  // duplicate id.
  bool claim(Peer& peer, const std::string& id) {
    if (!peer.client_id.empty()) {
      if (peer.client_id == id) return true;
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "connection already belongs to '" + peer.client_id + "'");
      return false;
    }
    if (id.empty()) {
      reject(peer, ProtocolCode::kUnexpectedMessage, "empty client id");
      return false;
    }
    if (!config_.expected_client_ids.empty() &&
        std::find(config_.expected_client_ids.begin(),
                  config_.expected_client_ids.end(),
                  id) == config_.expected_client_ids.end()) {
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "client '" + id + "' is not part of this session");
      return false;
    }
    if (claimed_.count(id)) {
      reject(peer, ProtocolCode::kDuplicateClient,
             "client id '" + id + "' is already connected");
      drop(peer);
      return false;
    }
    claimed_.insert(id);
    peer.client_id = id;
    return true;
  }

  void on_range(Peer& peer, RangeReport report) {
    if (!check_header(peer, report.session_id, report.task)) return;
    if (!grid_round_) {
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "range report outside the grid round");
      return;
    }
    if (!claim(peer, report.client_id)) return;
    if (ranges_.count(report.client_id)) {
      reject(peer, ProtocolCode::kUnexpectedMessage, "range already reported");
      return;
    }
    ranges_.emplace(report.client_id, report.info);
    if (ranges_.size() == config_.expected_clients) announce_grid();
  }

  void announce_grid() {
    std::vector<RangeInfo> infos;
    for (const auto& [id, info] : ranges_) infos.push_back(info);
    grid_ = task_grid(config_.task, infos, config_.options);
    grid_round_ = false;
    broadcast(GridAnnounce{config_.session_id, grid_});
  }

  void on_summary(Peer& peer, SummaryMessage message) {
    if (!check_header(peer, message.session_id, message.task)) return;
    if (grid_round_) {
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "summary sent before the grid was announced");
      return;
    }
    if (is_grid_task(config_.task) && peer.client_id.empty()) {
      reject(peer, ProtocolCode::kUnexpectedMessage,
             "summary from a client that skipped the range round");
      return;
    }
    if (!claim(peer, message.client_id)) return;
    if (summaries_.count(message.client_id)) {
      reject(peer, ProtocolCode::kDuplicateClient,
             "client '" + message.client_id + "' already sent a summary");
      return;
    }
    try {
      check_payload_layout(message.payload, config_.task, grid_);
      if (message.layout != payload_layout(message.payload)) {
        fail(ErrorCategory::kProtocol,
             "message layout disagrees with its payload");
      }
    } catch (const Error& e) {
      reject(peer, ProtocolCode::kLayoutMismatch, e.what());
      return;
    }
    summaries_.emplace(message.client_id, std::move(message.payload));
  }

  SessionOutcome finish() {
    SessionOutcome outcome;
    outcome.grid = grid_;
    std::vector<SummaryPayload> ordered;
    for (const auto& [id, payload] : summaries_) ordered.push_back(payload);
    outcome.federated =
        federate(config_.task, ordered, grid_, config_.alpha, config_.options);
    for (const auto& payload : ordered) {
      outcome.clients.push_back(
          {payload, federate(config_.task, std::span(&payload, 1), grid_,
                             config_.alpha, config_.options)});
    }
    outcome.protocol_errors = errors_;
    broadcast(ResultMessage{config_.session_id, outcome.federated});
    return outcome;
  }

  [[noreturn]] void timeout() {
    std::string detail;
    if (!config_.expected_client_ids.empty()) {
      std::vector<std::string> missing;
      for (const auto& id : config_.expected_client_ids) {
        if (!summaries_.count(id)) missing.push_back(id);
      }
      detail = "missing clients:";
      for (const auto& id : missing) detail += " " + id;
    } else {
      detail = "received " + std::to_string(summaries_.size()) + " of " +
               std::to_string(config_.expected_clients) + " summaries";
      std::vector<std::string> silent;
      for (const auto& id : claimed_) {
        if (!summaries_.count(id)) silent.push_back(id);
      }
      if (!silent.empty()) {
        detail += "; connected without a summary:";
        for (const auto& id : silent) detail += " " + id;
      }
    }
    fail(ErrorCategory::kTimeout, "session timed out; " + detail);
  }

  void reject(Peer& peer, ProtocolCode code, const std::string& text) {
    ErrorMessage error{code, text};
    errors_.push_back(error);
    try {
      peer.conn.send(error);
    } catch (const Error&) {
      drop(peer);
    }
  }

  void drop(Peer& peer) {
    peer.conn.close();
    peer.closed = true;
  }

  void broadcast(const Message& message) {
    for (auto& p : peers_) {
      if (p->closed || p->client_id.empty()) continue;
      try {
        p->conn.send(message);
      } catch (const Error&) {
        drop(*p);
      }
    }
  }

  const SessionConfig& config_;
  Listener& listener_;
  std::vector<std::unique_ptr<Peer>> peers_;
  std::set<std::string> claimed_;
  std::map<std::string, RangeInfo> ranges_;
  std::map<std::string, SummaryPayload> summaries_;
  std::vector<ErrorMessage> errors_;
  ParamGrid grid_;
  bool grid_round_ = false;
};

[[noreturn]] void remote_failure(const ErrorMessage& error) {
  fail(ErrorCategory::kProtocol,
       "coordinator rejected the client: " + error.text);
}

}  // namespace

SessionOutcome coordinate_session(const SessionConfig& config,
                                  Listener& listener) {
  config.validate();
  require(listener.fd() >= 0, "listener is not bound");
  return Coordinator(config, listener).run();
}

ConfidenceSet run_client(const ClientOptions& options, const ClientDataset& ds,
                         TaskKind task, const EstimatorOptions& estimator) {
  ds.validate();
  const auto deadline = Clock::now() + options.timeout;
  Connection conn = Connection::connect(options.host, options.port,
                                        options.timeout);
  ParamGrid grid;
  if (is_grid_task(task)) {
    conn.send(RangeReport{options.session_id, ds.client_id, task,
                          range_info(ds)});
    Message reply = conn.receive(deadline);
    if (const auto* e = std::get_if<ErrorMessage>(&reply)) remote_failure(*e);
    const auto* announce = std::get_if<GridAnnounce>(&reply);
    if (!announce) {
      fail(ErrorCategory::kProtocol, "expected a grid announcement");
    }
    grid = announce->grid;
  }
  SummaryMessage message;
  message.session_id = options.session_id;
  message.client_id = ds.client_id;
  message.task = task;
  message.payload = compute_payload(ds, task, grid, estimator);
  message.layout = payload_layout(message.payload);
  conn.send(message);
  Message reply = conn.receive(deadline);
  if (const auto* e = std::get_if<ErrorMessage>(&reply)) remote_failure(*e);
  auto* result = std::get_if<ResultMessage>(&reply);
  if (!result) fail(ErrorCategory::kProtocol, "expected a result message");
  return std::move(result->set);
}

}  // namespace fedppi::transport
