#include <zlib.h>

#include <bit>
#include <cstring>
#include <string>

#include "fedppi/error.hpp"
#include "fedppi/transport.hpp"

namespace fedppi::transport {
namespace {

constexpr std::size_t kHeaderBytes = 2 + 1 + 4;
constexpr std::size_t kTrailerBytes = 4;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> bytes_;
};

[[noreturn]] void malformed(const std::string& what) {
  throw DecodeError(DecodeFailure::kMalformed, "malformed message: " + what);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::size_t n = length(1);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  // Element count checked against the bytes left, so a corrupt count cannot
  // trigger a huge allocation.
  std::size_t length(std::size_t element_bytes) {
    const std::size_t n = u32();
    if (n > (bytes_.size() - pos_) / element_bytes) malformed("length overrun");
    return n;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void finish() const {
    if (pos_ != bytes_.size()) malformed("trailing bytes in body");
  }

 private:
  std::uint64_t get(std::size_t width) {
    if (bytes_.size() - pos_ < width) malformed("body ends early");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += width;
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::span<const std::uint8_t> body) {
  return static_cast<std::uint32_t>(
      crc32(0L, body.data(), static_cast<uInt>(body.size())));
}

void put_task(Writer& w, TaskKind task) { w.u8(static_cast<std::uint8_t>(task)); }

TaskKind get_task(Reader& r) {
  const auto v = r.u8();
  if (v > static_cast<std::uint8_t>(TaskKind::kLinear)) malformed("task kind");
  return static_cast<TaskKind>(v);
}

void put_grid(Writer& w, const ParamGrid& grid) {
  w.u32(static_cast<std::uint32_t>(grid.dims()));
  for (const auto& axis : grid.axes()) {
    w.u32(static_cast<std::uint32_t>(axis.size()));
    for (double v : axis) w.f64(v);
  }
}

ParamGrid get_grid(Reader& r) {
  const std::size_t dims = r.length(4);
  if (dims == 0) return {};
  std::vector<std::vector<double>> axes(dims);
  for (auto& axis : axes) {
    axis.resize(r.length(8));
    for (double& v : axis) v = r.f64();
  }
  return ParamGrid(std::move(axes));
}

void put_vector(Writer& w, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

void put_matrix(Writer& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) w.f64(m(r, c));
  }
}

Eigen::VectorXd get_vector(Reader& r, std::size_t d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = r.f64();
  return v;
}

Eigen::MatrixXd get_matrix(Reader& r, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, c) = r.f64();
  }
  return m;
}

void put_body(Writer& w, const RangeReport& m) {
  w.str(m.session_id);
  w.str(m.client_id);
  put_task(w, m.task);
  w.f64(m.info.range.min);
  w.f64(m.info.range.max);
  w.u64(m.info.range.n_labeled);
  w.u64(m.info.range.n_unlabeled);
  w.u32(m.info.dims);
}

void put_body(Writer& w, const GridAnnounce& m) {
  w.str(m.session_id);
  put_grid(w, m.grid);
}

void put_body(Writer& w, const SummaryMessage& m) {
  require(payload_client_id(m.payload) == m.client_id,
          "summary message: payload belongs to '" +
              payload_client_id(m.payload) + "', not '" + m.client_id + "'");
  w.str(m.session_id);
  w.str(m.client_id);
  put_task(w, m.task);
  w.u32(m.layout.points);
  w.u32(m.layout.dims);
  if (const auto* s = std::get_if<ClientSummary>(&m.payload)) {
    w.u8(0);
    w.u64(s->n_labeled);
    w.u64(s->n_unlabeled);
    w.u32(s->layout.points);
    w.u32(s->layout.dims);
    w.u32(static_cast<std::uint32_t>(s->coords.size()));
    for (const auto& c : s->coords) {
      w.f64(c.estimate);
      w.f64(c.rectifier);
      w.f64(c.var_estimate);
      w.f64(c.var_rectifier);
    }
  } else {
    const auto& lin = std::get<LinearClientSummary>(m.payload);
    lin.validate();
    w.u8(1);
    w.u64(lin.n_labeled);
    w.u64(lin.n_unlabeled);
    w.u32(static_cast<std::uint32_t>(lin.dims()));
    put_vector(w, lin.theta_f);
    put_vector(w, lin.delta);
    put_matrix(w, lin.sigma_unl);
    put_matrix(w, lin.meat_unl);
    put_matrix(w, lin.sigma_lab);
    put_matrix(w, lin.meat_lab);
  }
}

void put_body(Writer& w, const ResultMessage& m) {
  w.str(m.session_id);
  if (const auto* iv = std::get_if<Interval>(&m.set)) {
    w.u8(0);
    w.f64(iv->lo);
    w.f64(iv->hi);
  } else {
    const auto& gs = std::get<GridSet>(m.set);
    w.u8(1);
    put_grid(w, gs.grid);
    w.u32(static_cast<std::uint32_t>(gs.retained.size()));
    for (auto flag : gs.retained) w.u8(flag);
  }
}

void put_body(Writer& w, const ErrorMessage& m) {
  w.u16(static_cast<std::uint16_t>(m.code));
  w.str(m.text);
}

SummaryMessage get_summary(Reader& r, std::uint16_t version) {
  SummaryMessage m;
  m.protocol_version = version;
  m.session_id = r.str();
  m.client_id = r.str();
  m.task = get_task(r);
  m.layout.points = r.u32();
  m.layout.dims = r.u32();
  const auto kind = r.u8();
  if (kind == 0) {
    ClientSummary s;
    s.client_id = m.client_id;
    s.n_labeled = r.u64();
    s.n_unlabeled = r.u64();
    s.layout.points = r.u32();
    s.layout.dims = r.u32();
    s.coords.resize(r.length(32));
    for (auto& c : s.coords) {
      c.estimate = r.f64();
      c.rectifier = r.f64();
      c.var_estimate = r.f64();
      c.var_rectifier = r.f64();
    }
    m.payload = std::move(s);
  } else if (kind == 1) {
    LinearClientSummary s;
    s.client_id = m.client_id;
    s.n_labeled = r.u64();
    s.n_unlabeled = r.u64();
    const std::size_t d = r.u32();
    if (d == 0 || d > 4096 || r.remaining() < (2 * d + 4 * d * d) * 8) {
      malformed("linear dimension");
    }
    s.theta_f = get_vector(r, d);
    s.delta = get_vector(r, d);
    s.sigma_unl = get_matrix(r, d);
    s.meat_unl = get_matrix(r, d);
    s.sigma_lab = get_matrix(r, d);
    s.meat_lab = get_matrix(r, d);
    m.payload = std::move(s);
  } else {
    malformed("summary payload kind");
  }
  return m;
}

Message get_body(Reader& r, MessageType type, std::uint16_t version) {
  switch (type) {
    case MessageType::kRangeReport: {
      RangeReport m;
      m.session_id = r.str();
      m.client_id = r.str();
      m.task = get_task(r);
      m.info.range.min = r.f64();
      m.info.range.max = r.f64();
      m.info.range.n_labeled = r.u64();
      m.info.range.n_unlabeled = r.u64();
      m.info.dims = r.u32();
      return m;
    }
    case MessageType::kGridAnnounce: {
      GridAnnounce m;
      m.session_id = r.str();
      m.grid = get_grid(r);
      return m;
    }
    case MessageType::kSummary:
      return get_summary(r, version);
    case MessageType::kResult: {
      ResultMessage m;
      m.session_id = r.str();
      const auto kind = r.u8();
      if (kind == 0) {
        const double lo = r.f64();
        const double hi = r.f64();
        m.set = Interval(lo, hi);
      } else if (kind == 1) {
        GridSet gs;
        gs.grid = get_grid(r);
        gs.retained.resize(r.length(1));
        for (auto& flag : gs.retained) flag = r.u8();
        if (gs.retained.size() != gs.grid.size()) malformed("retained mask size");
        m.set = std::move(gs);
      } else {
        malformed("result set kind");
      }
      return m;
    }
    case MessageType::kError: {
      ErrorMessage m;
      m.code = static_cast<ProtocolCode>(r.u16());
      m.text = r.str();
      return m;
    }
  }
  malformed("unknown message type " + std::to_string(static_cast<int>(type)));
}

MessageType type_of(const Message& m) {
  return static_cast<MessageType>(m.index() + 1);
}

std::vector<std::uint8_t> assemble(MessageType type, std::uint16_t version,
                                   std::vector<std::uint8_t> body) {
  Writer w;
  w.u16(version);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(static_cast<std::uint32_t>(body.size()));
  auto& out = w.bytes();
  out.insert(out.end(), body.begin(), body.end());
  w.u32(checksum(body));
  return std::move(out);
}

}  // namespace

bool RangeReport::operator==(const RangeReport& o) const {
  return session_id == o.session_id && client_id == o.client_id &&
         task == o.task && info.range == o.info.range && info.dims == o.info.dims;
}

std::vector<std::uint8_t> encode(const Message& message) {
  Writer body;
  std::visit([&](const auto& m) { put_body(body, m); }, message);
  std::uint16_t version = kProtocolVersion;
  if (const auto* s = std::get_if<SummaryMessage>(&message)) {
    version = s->protocol_version;
  }
  return assemble(type_of(message), version, std::move(body.bytes()));
}

std::vector<std::uint8_t> encode(const SummaryMessage& message) {
  return encode(Message(message));
}

Message decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw DecodeError(DecodeFailure::kTruncatedFrame,
                      "truncated frame: " + std::to_string(bytes.size()) +
                          " bytes, header needs " +
                          std::to_string(kHeaderBytes));
  }
  Reader header(bytes.first(kHeaderBytes));
  const std::uint16_t version = header.u16();
  const std::uint8_t type = header.u8();
  const std::uint32_t body_len = header.u32();
  if (version != kProtocolVersion) {
    throw DecodeError(DecodeFailure::kUnknownVersion,
                      "unknown protocol version " + std::to_string(version));
  }
  const std::size_t rest = bytes.size() - kHeaderBytes;
  if (rest < std::size_t{body_len} + kTrailerBytes) {
    throw DecodeError(DecodeFailure::kTruncatedFrame,
                      "truncated frame: body needs " +
                          std::to_string(body_len + kTrailerBytes) +
                          " bytes, have " + std::to_string(rest));
  }
  if (rest > std::size_t{body_len} + kTrailerBytes) {
    malformed("trailing bytes after checksum");
  }
  const auto body = bytes.subspan(kHeaderBytes, body_len);
  Reader trailer(bytes.subspan(kHeaderBytes + body_len, kTrailerBytes));
  const std::uint32_t expected = trailer.u32();
  if (checksum(body) != expected) {
    throw DecodeError(DecodeFailure::kChecksumMismatch,
                      "checksum mismatch in message body");
  }
  if (type < 1 || type > 5) {
    malformed("unknown message type " + std::to_string(type));
  }
  Reader r(body);
  try {
    Message m = get_body(r, static_cast<MessageType>(type), version);
    r.finish();
    return m;
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    malformed(e.what());
  }
}

SummaryMessage decode_summary(std::span<const std::uint8_t> bytes) {
  Message m = decode(bytes);
  if (auto* s = std::get_if<SummaryMessage>(&m)) return std::move(*s);
  malformed("expected a summary message");
}

std::vector<std::uint8_t> frame(std::span<const std::uint8_t> message) {
  require(message.size() <= kMaxFrameBytes, "frame exceeds the size limit");
  Writer w;
  w.u32(static_cast<std::uint32_t>(message.size()));
  auto& out = w.bytes();
  out.insert(out.end(), message.begin(), message.end());
  return std::move(out);
}

}  // namespace fedppi::transport
