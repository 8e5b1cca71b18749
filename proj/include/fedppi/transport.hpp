#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedppi/estimators.hpp"
#include "fedppi/grid.hpp"
#include "fedppi/pipeline.hpp"
#include "fedppi/task.hpp"

namespace fedppi::transport {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = std::size_t{256} << 20;

enum class MessageType : std::uint8_t {
  kRangeReport = 1,
  kGridAnnounce = 2,
  kSummary = 3,
  kResult = 4,
  kError = 5,
};

struct RangeReport {
  std::string session_id;
  std::string client_id;
  TaskKind task = TaskKind::kMean;
  RangeInfo info;

  bool operator==(const RangeReport& o) const;
};

struct GridAnnounce {
  std::string session_id;
  ParamGrid grid;

  friend bool operator==(const GridAnnounce&, const GridAnnounce&) = default;
};

struct SummaryMessage {
  std::uint16_t protocol_version = kProtocolVersion;
  std::string session_id;
  std::string client_id;
  TaskKind task = TaskKind::kMean;
  CoordLayout layout;
  SummaryPayload payload;

  friend bool operator==(const SummaryMessage&,
                         const SummaryMessage&) = default;
};

struct ResultMessage {
  std::string session_id;
  ConfidenceSet set;

  friend bool operator==(const ResultMessage&, const ResultMessage&) = default;
};

enum class ProtocolCode : std::uint16_t {
  kLayoutMismatch = 1,
  kDuplicateClient = 2,
  kWrongSession = 3,
  kWrongTask = 4,
  kUnexpectedMessage = 5,
  kBadFrame = 6,
  kSessionFailed = 7,
};

struct ErrorMessage {
  ProtocolCode code = ProtocolCode::kBadFrame;
  std::string text;

  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message = std::variant<RangeReport, GridAnnounce, SummaryMessage,
                             ResultMessage, ErrorMessage>;

/// Message bytes (without the outer length prefix):
///   u16 version | u8 type | u32 body length | body | u32 CRC-32(body)
/// All integers big-endian, reals as big-endian IEEE-754 binary64.
std::vector<std::uint8_t> encode(const Message& message);
std::vector<std::uint8_t> encode(const SummaryMessage& message);
/// Throws DecodeError: kTruncatedFrame, kUnknownVersion, kChecksumMismatch
/// or kMalformed.
Message decode(std::span<const std::uint8_t> bytes);
SummaryMessage decode_summary(std::span<const std::uint8_t> bytes);

/// 4-byte big-endian length prefix followed by the message bytes.
std::vector<std::uint8_t> frame(std::span<const std::uint8_t> message);

// ------------------------------------------------------------- sockets

using Clock = std::chrono::steady_clock;

class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  static Connection connect(const std::string& host, std::uint16_t port,
                            std::chrono::milliseconds timeout);

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }

  void send_bytes(std::span<const std::uint8_t> bytes);
  void send(const Message& message);
  /// Reads one frame; throws a timeout error past the deadline.
  std::vector<std::uint8_t> receive_frame(Clock::time_point deadline);
  Message receive(Clock::time_point deadline);
  void close() noexcept;

 private:
  int fd_ = -1;
};

class Listener {
 public:
  Listener() = default;
  Listener(Listener&& other) noexcept;
  Listener& operator=(Listener&& other) noexcept;
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener();

  /// Port 0 picks an ephemeral port.
  static Listener bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const noexcept { return port_; }
  int fd() const noexcept { return fd_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// ------------------------------------------------------------- session

struct SessionConfig {
  std::string session_id = "fedppi";
  std::size_t expected_clients = 1;
  double alpha = 0.1;
  TaskKind task = TaskKind::kMean;
  EstimatorOptions options;
  // When set, the timeout error names the ids still missing.
  std::vector<std::string> expected_client_ids;
  std::chrono::milliseconds timeout{30000};

  void validate() const;
};

struct ReceivedSummary {
  SummaryPayload payload;
  ConfidenceSet client_set;  // that client's data alone
};

struct SessionOutcome {
  ParamGrid grid;
  std::vector<ReceivedSummary> clients;  // ordered by client id
  ConfidenceSet federated;
  std::vector<ErrorMessage> protocol_errors;  // rejected frames, in order
  std::chrono::duration<double> elapsed{};
};

/// Runs one session on an already bound listener:
///   round 1 (grid tasks)  collect K RangeReports, broadcast GridAnnounce
///   round 2               collect K SummaryMessages, aggregate in client-id
///                         order, broadcast ResultMessage
/// Bad frames and layout mismatches get an ErrorMessage and the connection
/// keeps waiting; duplicate client ids are rejected and disconnected.
SessionOutcome coordinate_session(const SessionConfig& config,
                                  Listener& listener);

struct ClientOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string session_id = "fedppi";
  std::chrono::milliseconds timeout{30000};
};

/// Client side of a session: optional range round, then one summary. Returns
/// the federated set broadcast by the coordinator.
ConfidenceSet run_client(const ClientOptions& options, const ClientDataset& ds,
                         TaskKind task, const EstimatorOptions& estimator);

}  // namespace fedppi::transport
