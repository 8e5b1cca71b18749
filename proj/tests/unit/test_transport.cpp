#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <future>
#include <thread>
#include <vector>

#include "fedppi/datagen.hpp"
#include "fedppi/error.hpp"
#include "fedppi/pipeline.hpp"
#include "fedppi/transport.hpp"
#include "helpers.hpp"

using namespace fedppi;
using namespace fedppi::transport;
using namespace std::chrono_literals;

namespace {

// Bitwise CRC-32 (reflected, polynomial 0xEDB88320).
std::uint32_t crc32_oracle(std::span<const std::uint8_t> bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (auto b : bytes) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

DecodeFailure failure_of(std::span<const std::uint8_t> bytes) {
  try {
    decode(bytes);
  } catch (const DecodeError& e) {
    return e.failure();
  }
  FAIL("decode accepted bad bytes");
  return DecodeFailure::kMalformed;
}

std::vector<ClientDataset> sample_clients(std::size_t k, TaskKind task,
                                          std::uint64_t seed) {
  GeneratorOptions g;
  g.task = task;
  g.size = 600 * k;
  g.seed = seed;
  g.predictor_bias = 0.2;
  g.predictor_noise_sd = 0.5;
  PartitionSpec p;
  p.ratios.assign(k, 1);
  p.lambda = 0.2;
  p.seed = seed;
  return partition(generate(g), p);
}

ConfidenceSet in_process(const std::vector<ClientDataset>& clients, TaskKind task,
                         const EstimatorOptions& options, double alpha) {
  std::vector<RangeInfo> ranges;
  for (const auto& c : clients) ranges.push_back(range_info(c));
  const auto grid = task_grid(task, ranges, options);
  std::vector<SummaryPayload> payloads;
  for (const auto& c : clients) payloads.push_back(compute_payload(c, task, grid, options));
  return federate(task, payloads, grid, alpha, options);
}

SummaryMessage summary_for(const ClientDataset& ds, TaskKind task,
                           const ParamGrid& grid, const std::string& session) {
  SummaryMessage m;
  m.session_id = session;
  m.client_id = ds.client_id;
  m.task = task;
  m.payload = compute_payload(ds, task, grid, {});
  m.layout = payload_layout(m.payload);
  return m;
}

struct Server {
  Listener listener = Listener::bind("127.0.0.1", 0);
  std::future<SessionOutcome> outcome;

  explicit Server(SessionConfig config) {
    outcome = std::async(std::launch::async,
                         [this, config] { return coordinate_session(config, listener); });
  }
  Connection connect() {
    return Connection::connect("127.0.0.1", listener.port(), 5000ms);
  }
  ClientOptions client_options(const std::string& session = "fedppi") const {
    ClientOptions o;
    o.port = listener.port();
    o.session_id = session;
    o.timeout = 10000ms;
    return o;
  }
};

Clock::time_point soon() { return Clock::now() + 5s; }

}  // namespace

// ----------------------------------------------------------------- codec

TEST_CASE("error message bytes") {
  const auto bytes = encode(Message{ErrorMessage{ProtocolCode::kBadFrame, "x"}});
  const std::vector<std::uint8_t> body{0x00, 0x06, 0x00, 0x00, 0x00, 0x01, 'x'};
  REQUIRE(bytes.size() == 7 + body.size() + 4);
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[1] == 0x01);
  CHECK(bytes[2] == 5);
  CHECK(bytes[3] == 0);
  CHECK(bytes[4] == 0);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == body.size());
  CHECK(std::equal(body.begin(), body.end(), bytes.begin() + 7));
  const std::uint32_t crc = crc32_oracle(body);
  CHECK(bytes[14] == (crc >> 24));
  CHECK(bytes[15] == ((crc >> 16) & 0xFF));
  CHECK(bytes[16] == ((crc >> 8) & 0xFF));
  CHECK(bytes[17] == (crc & 0xFF));
}

TEST_CASE("reals travel as big-endian binary64") {
  const auto bytes =
      encode(Message{ResultMessage{"s", ConfidenceSet{Interval{-2.0, 1.0}}}});
  // body: u32 1, 's', u8 0, f64 -2.0, f64 1.0
  const std::uint8_t expected[] = {0, 0, 0, 1, 's', 0,
                                   0xC0, 0x00, 0, 0, 0, 0, 0, 0,
                                   0x3F, 0xF0, 0, 0, 0, 0, 0, 0};
  REQUIRE(bytes.size() == 7 + sizeof expected + 4);
  CHECK(std::memcmp(bytes.data() + 7, expected, sizeof expected) == 0);
}

TEST_CASE("frame prefixes the length") {
  const std::uint8_t msg[] = {1, 2, 3};
  const auto f = frame(msg);
  CHECK(f == std::vector<std::uint8_t>{0, 0, 0, 3, 1, 2, 3});
}

TEST_CASE("every message type round trips") {
  Rng rng(3);
  const auto ds = testutil::random_client(rng, "client-07", 20, 80, 1);
  const auto lin_ds = testutil::random_client(rng, "client-08", 20, 80, 3, false, 0.2, true);
  const auto grid = ParamGrid::uniform(-1.5, 2.5, 17);

  RangeReport rr{"sess", "client-07", TaskKind::kQuantile, range_info(ds)};
  GridAnnounce ga{"sess", ParamGrid::cube(2, -1, 3, 5)};
  SummaryMessage coord = summary_for(ds, TaskKind::kQuantile, grid, "sess");
  SummaryMessage linear = summary_for(lin_ds, TaskKind::kLinear, {}, "sess");
  GridSet gs;
  gs.grid = grid;
  gs.retained.assign(grid.size(), 0);
  gs.retained[3] = gs.retained[4] = 1;
  ResultMessage interval{"sess", ConfidenceSet{Interval{-0.25, 1e-300}}};
  ResultMessage grid_result{"sess", ConfidenceSet{gs}};
  ErrorMessage err{ProtocolCode::kLayoutMismatch, "layout 3x1 expected"};

  for (const Message& m : {Message{rr}, Message{ga}, Message{coord}, Message{linear},
                           Message{interval}, Message{grid_result}, Message{err}}) {
    const auto bytes = encode(m);
    CHECK(decode(bytes) == m);
    CHECK(encode(decode(bytes)) == bytes);
  }
  CHECK(decode_summary(encode(coord)) == coord);
  CHECK(decode_summary(encode(linear)) == linear);
  CHECK_THROWS_AS(decode_summary(encode(Message{err})), DecodeError);
}

TEST_CASE("decode failures") {
  const auto good = encode(Message{ErrorMessage{ProtocolCode::kWrongTask, "abc"}});
  CHECK(failure_of({}) == DecodeFailure::kTruncatedFrame);
  CHECK(failure_of(std::span(good).first(6)) == DecodeFailure::kTruncatedFrame);
  CHECK(failure_of(std::span(good).first(good.size() - 1)) ==
        DecodeFailure::kTruncatedFrame);

  auto version = good;
  version[1] = 2;
  CHECK(failure_of(version) == DecodeFailure::kUnknownVersion);

  auto flipped = good;
  flipped[9] ^= 0x01;
  CHECK(failure_of(flipped) == DecodeFailure::kChecksumMismatch);
  auto bad_crc = good;
  bad_crc.back() ^= 0x80;
  CHECK(failure_of(bad_crc) == DecodeFailure::kChecksumMismatch);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(failure_of(trailing) == DecodeFailure::kMalformed);

  auto type = good;
  type[2] = 9;
  CHECK(failure_of(type) == DecodeFailure::kMalformed);

  // A body that passes the checksum but not the schema.
  std::vector<std::uint8_t> body{0x00, 0x01, 0xFF, 0xFF, 0xFF, 0xFF};
  std::vector<std::uint8_t> bytes{0, 1, 5, 0, 0, 0, static_cast<std::uint8_t>(body.size())};
  bytes.insert(bytes.end(), body.begin(), body.end());
  const auto crc = crc32_oracle(body);
  for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<std::uint8_t>(crc >> s));
  CHECK(failure_of(bytes) == DecodeFailure::kMalformed);
}

TEST_CASE("random corruption only ever raises decode errors") {
  Rng rng(99);
  const auto ds = testutil::random_client(rng, "c", 10, 30, 2, false, 0.1, true);
  const auto base = encode(summary_for(ds, TaskKind::kLinear, {}, "s"));
  for (int t = 0; t < 3000; ++t) {
    auto bytes = base;
    const int edits = 1 + static_cast<int>(rng.below(4));
    for (int e = 0; e < edits; ++e) {
      bytes[rng.below(bytes.size())] = static_cast<std::uint8_t>(rng.below(256));
    }
    if (rng.below(4) == 0) bytes.resize(rng.below(bytes.size()));
    try {
      decode(bytes);
    } catch (const DecodeError&) {
    } catch (...) {
      FAIL("non-decode exception");
    }
  }
}

TEST_CASE("summary size does not depend on the sample count") {
  Rng rng(5);
  const auto small = testutil::random_client(rng, "client-00", 10, 50, 1);
  const auto large = testutil::random_client(rng, "client-00", 5000, 50000, 1);
  const auto grid = ParamGrid::uniform(-3, 5, 64);
  for (TaskKind task : {TaskKind::kMean, TaskKind::kQuantile}) {
    CHECK(encode(summary_for(small, task, grid, "s")).size() ==
          encode(summary_for(large, task, grid, "s")).size());
  }
  const auto ls = testutil::random_client(rng, "client-00", 10, 50, 2, false, 0.2, true);
  const auto ll = testutil::random_client(rng, "client-00", 5000, 50000, 2, false, 0.2, true);
  CHECK(encode(summary_for(ls, TaskKind::kLinear, {}, "s")).size() ==
        encode(summary_for(ll, TaskKind::kLinear, {}, "s")).size());
}

// --------------------------------------------------------------- session

TEST_CASE("loopback sessions equal the in-process result") {
  for (TaskKind task : {TaskKind::kMean, TaskKind::kQuantile, TaskKind::kLogistic,
                        TaskKind::kLinear}) {
    for (std::size_t k : {1u, 3u}) {
      CAPTURE(to_string(task));
      CAPTURE(k);
      const auto clients = sample_clients(k, task, 40 + k);
      SessionConfig config;
      config.expected_clients = k;
      config.task = task;
      config.timeout = 20000ms;
      Server server(config);
      std::vector<std::future<ConfidenceSet>> received;
      for (const auto& c : clients) {
        received.push_back(std::async(std::launch::async, [&server, &c, task] {
          return run_client(server.client_options(), c, task, {});
        }));
      }
      const auto outcome = server.outcome.get();
      const auto expected = in_process(clients, task, {}, 0.1);
      CHECK(outcome.federated == expected);
      for (auto& r : received) CHECK(r.get() == expected);
      REQUIRE(outcome.clients.size() == k);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(payload_client_id(outcome.clients[i].payload) == clients[i].client_id);
      }
      CHECK(outcome.protocol_errors.empty());
    }
  }
}

TEST_CASE("arrival order does not change the result") {
  const auto clients = sample_clients(3, TaskKind::kMean, 8);
  std::vector<ConfidenceSet> results;
  for (const std::vector<int>& order : {std::vector<int>{0, 1, 2}, {2, 0, 1}, {1, 2, 0}}) {
    SessionConfig config;
    config.expected_clients = 3;
    Server server(config);
    std::vector<Connection> conns;
    for (int i : order) {
      conns.push_back(server.connect());
      conns.back().send(summary_for(clients[i], TaskKind::kMean, {}, "fedppi"));
      // Let this frame land before the next client writes.
      std::this_thread::sleep_for(20ms);
    }
    const auto outcome = server.outcome.get();
    results.push_back(outcome.federated);
    for (auto& c : conns) {
      CHECK(std::holds_alternative<ResultMessage>(c.receive(soon())));
    }
  }
  CHECK(results[0] == results[1]);
  CHECK(results[0] == results[2]);
}

TEST_CASE("layout mismatch is reported and a corrected summary accepted") {
  Rng rng(6);
  const auto ds = testutil::random_client(rng, "client-00", 20, 100, 1);
  SessionConfig config;
  Server server(config);
  auto conn = server.connect();
  // A quantile-shaped summary in a mean session.
  auto wrong = summary_for(ds, TaskKind::kMean, {}, "fedppi");
  wrong.payload = quantile_client_summary(ds, ParamGrid::uniform(0, 1, 3));
  wrong.layout = payload_layout(wrong.payload);
  conn.send(wrong);
  const auto reply = conn.receive(soon());
  REQUIRE(std::holds_alternative<ErrorMessage>(reply));
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kLayoutMismatch);
  conn.send(summary_for(ds, TaskKind::kMean, {}, "fedppi"));
  const auto result = conn.receive(soon());
  REQUIRE(std::holds_alternative<ResultMessage>(result));
  const auto outcome = server.outcome.get();
  CHECK(outcome.protocol_errors.size() == 1);
  CHECK(std::get<ResultMessage>(result).set == outcome.federated);
}

TEST_CASE("wrong session and wrong task are rejected without closing") {
  Rng rng(7);
  const auto ds = testutil::random_client(rng, "client-00", 20, 100, 1);
  SessionConfig config;
  config.session_id = "alpha";
  Server server(config);
  auto conn = server.connect();
  conn.send(summary_for(ds, TaskKind::kMean, {}, "beta"));
  auto reply = conn.receive(soon());
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kWrongSession);
  auto task_msg = summary_for(ds, TaskKind::kMean, {}, "alpha");
  task_msg.task = TaskKind::kQuantile;
  conn.send(task_msg);
  reply = conn.receive(soon());
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kWrongTask);
  conn.send(summary_for(ds, TaskKind::kMean, {}, "alpha"));
  CHECK(std::holds_alternative<ResultMessage>(conn.receive(soon())));
  CHECK(server.outcome.get().protocol_errors.size() == 2);
}

TEST_CASE("garbage frames are rejected and the session continues") {
  Rng rng(8);
  const auto ds = testutil::random_client(rng, "client-00", 20, 100, 1);
  SessionConfig config;
  Server server(config);
  auto conn = server.connect();
  const std::vector<std::uint8_t> junk{0xde, 0xad, 0xbe, 0xef, 0x00, 0x01, 0x02, 0x03};
  conn.send_bytes(frame(junk));
  auto reply = conn.receive(soon());
  REQUIRE(std::holds_alternative<ErrorMessage>(reply));
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kBadFrame);
  auto corrupt = encode(summary_for(ds, TaskKind::kMean, {}, "fedppi"));
  corrupt[20] ^= 0xFF;
  conn.send_bytes(frame(corrupt));
  reply = conn.receive(soon());
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kBadFrame);
  CHECK(std::get<ErrorMessage>(reply).text.find("checksum") != std::string::npos);
  conn.send(summary_for(ds, TaskKind::kMean, {}, "fedppi"));
  CHECK(std::holds_alternative<ResultMessage>(conn.receive(soon())));
  server.outcome.get();
}

TEST_CASE("duplicate client ids are rejected and disconnected") {
  const auto clients = sample_clients(2, TaskKind::kMean, 9);
  SessionConfig config;
  config.expected_clients = 2;
  Server server(config);
  auto first = server.connect();
  first.send(summary_for(clients[0], TaskKind::kMean, {}, "fedppi"));
  std::this_thread::sleep_for(50ms);
  auto impostor = server.connect();
  impostor.send(summary_for(clients[0], TaskKind::kMean, {}, "fedppi"));
  const auto reply = impostor.receive(soon());
  REQUIRE(std::holds_alternative<ErrorMessage>(reply));
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kDuplicateClient);
  CHECK_THROWS_AS(impostor.receive(soon()), Error);

  auto second = server.connect();
  second.send(summary_for(clients[1], TaskKind::kMean, {}, "fedppi"));
  CHECK(std::holds_alternative<ResultMessage>(first.receive(soon())));
  CHECK(std::holds_alternative<ResultMessage>(second.receive(soon())));
  const auto outcome = server.outcome.get();
  CHECK(outcome.federated == in_process(clients, TaskKind::kMean, {}, 0.1));
}

TEST_CASE("timeout names the missing clients") {
  const auto clients = sample_clients(1, TaskKind::kMean, 10);
  SessionConfig config;
  config.expected_clients = 3;
  config.expected_client_ids = {"client-00", "client-01", "client-02"};
  config.timeout = 400ms;
  Server server(config);
  auto conn = server.connect();
  conn.send(summary_for(clients[0], TaskKind::kMean, {}, "fedppi"));
  try {
    server.outcome.get();
    FAIL("session completed without its clients");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kTimeout);
    const std::string text = e.what();
    CHECK(text.find("client-01") != std::string::npos);
    CHECK(text.find("client-02") != std::string::npos);
    CHECK(text.find("client-00") == std::string::npos);
  }
  const auto reply = conn.receive(soon());
  REQUIRE(std::holds_alternative<ErrorMessage>(reply));
  CHECK(std::get<ErrorMessage>(reply).code == ProtocolCode::kSessionFailed);
}

TEST_CASE("a registered client that disconnects fails the session") {
  const auto clients = sample_clients(2, TaskKind::kMean, 11);
  SessionConfig config;
  config.expected_clients = 2;
  Server server(config);
  {
    auto conn = server.connect();
    conn.send(summary_for(clients[0], TaskKind::kMean, {}, "fedppi"));
    std::this_thread::sleep_for(50ms);
  }
  try {
    server.outcome.get();
    FAIL("session survived a lost client");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kProtocol);
    CHECK(std::string(e.what()).find("client-00") != std::string::npos);
  }
}

TEST_CASE("client surfaces coordinator errors") {
  Rng rng(12);
  const auto ds = testutil::random_client(rng, "client-00", 20, 100, 1);
  SessionConfig config;
  config.session_id = "right";
  config.timeout = 2000ms;
  Server server(config);
  try {
    run_client(server.client_options("wrong"), ds, TaskKind::kMean, {});
    FAIL("client accepted a rejection");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kProtocol);
  }
  CHECK_THROWS_AS(server.outcome.get(), Error);
}

TEST_CASE("session config validation") {
  SessionConfig c;
  c.expected_clients = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.expected_clients = 2;
  c.expected_client_ids = {"a"};
  CHECK_THROWS_AS(c.validate(), Error);
  c.expected_client_ids = {"a", "b"};
  CHECK_NOTHROW(c.validate());
}
