// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "fedppi/datagen.hpp"
#include "fedppi/error.hpp"
#include "fedppi/experiment.hpp"
#include "fedppi/oracle.hpp"
#include "fedppi/pipeline.hpp"
#include "fedppi/rng.hpp"
#include "fedppi/stats.hpp"
#include "fedppi/transport.hpp"

using namespace fedppi;
using namespace std::chrono_literals;

namespace {

using Seconds = std::chrono::duration<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ------------------------------------------------------------ criterion 1

// Splits a population into K contiguous full-population clients: every row
// is both labeled and "unlabeled", so client statistics are population
// averages over the client's rows.
std::vector<ClientDataset> full_population_split(const Population& pop,
                                                 std::size_t k, Rng& rng) {
  const std::size_t total = pop.size();
  std::vector<std::size_t> cuts{0, total};
  while (cuts.size() < k + 1) {
    const std::size_t c = 1 + static_cast<std::size_t>(rng.below(total - 1));
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<ClientDataset> clients;
  for (std::size_t i = 0; i < k; ++i) {
    const auto from = static_cast<Eigen::Index>(cuts[i]);
    const auto rows = static_cast<Eigen::Index>(cuts[i + 1] - cuts[i]);
    ClientDataset c;
    c.client_id = client_name(i);
    c.labeled_x = pop.features.middleRows(from, rows);
    c.labeled_y = pop.outcomes.segment(from, rows);
    c.labeled_pred = pop.predictions.segment(from, rows);
    c.unlabeled_x = c.labeled_x;
    c.unlabeled_pred = c.labeled_pred;
    clients.push_back(std::move(c));
  }
  return clients;
}

Outcome criterion_1() {
  Rng rng(101);
  const std::size_t ks[] = {2, 5, 20};
  double worst = 0.0;
  std::size_t splits = 0;
  std::size_t comparisons = 0;
  for (std::size_t trial = 0; trial < 24; ++trial) {
    const std::size_t k = ks[trial % 3];
    const std::size_t size = 200 + static_cast<std::size_t>(rng.below(1800));
    struct Family {
      TaskKind task;
      SummaryKind kind;
      ParamGrid grid;
      std::size_t dims;
    };
    const Family families[] = {
        {TaskKind::kMean, SummaryKind::kMean, {}, 1},
        {TaskKind::kQuantile, SummaryKind::kQuantile, ParamGrid::uniform(-1, 5, 129), 1},
        {TaskKind::kLogistic, SummaryKind::kLogistic,
         ParamGrid::cube(1 + trial % 3, -1, 2, trial % 3 == 2 ? 5 : 9), 1 + trial % 3},
        {TaskKind::kLinear, SummaryKind::kLinearGradient,
         ParamGrid::cube(2, -1, 2, 9), 2},
    };
    for (const auto& f : families) {
      GeneratorOptions g;
      g.task = f.task;
      g.size = size;
      g.seed = 1000 + trial;
      g.predictor_bias = 0.3;
      g.predictor_noise_sd = 0.4;
      g.logistic_dims = f.task == TaskKind::kLogistic ? f.dims : 1;
      const auto pop = generate(g);
      const auto clients = full_population_split(pop, k, rng);
      std::vector<ClientSummary> summaries;
      for (const auto& c : clients) summaries.push_back(client_summary(c, f.kind, f.grid));
      // Weights proportional to m_k: n_k = N_k = m_k here.
      const auto weights = compute_weights(summaries);
      for (std::size_t i = 0; i < clients.size(); ++i) {
        const double m = static_cast<double>(clients[i].n_labeled());
        worst = std::max(worst, rel_diff(weights[i], m / static_cast<double>(size)));
      }
      const auto fed = aggregate(summaries, weights);
      const auto direct = pooled_oracle(clients, f.kind, f.grid);
      if (fed.coords.size() != direct.coords.size()) {
        return {false, "layout differs from the pooled computation"};
      }
      for (std::size_t i = 0; i < fed.coords.size(); ++i) {
        const auto& a = fed.coords[i];
        const auto& b = direct.coords[i];
        worst = std::max({worst, rel_diff(a.estimate, b.estimate),
                          rel_diff(a.rectifier, b.rectifier),
                          rel_diff(a.var_estimate, b.var_estimate),
                          rel_diff(a.var_rectifier, b.var_rectifier)});
        comparisons += 4;
      }
    }
    ++splits;
  }
  return {worst <= 1e-10, std::to_string(splits) + " splits x 4 families, " +
                              std::to_string(comparisons) +
                              " statistics, max relative error " +
                              fmt("%.3g", worst)};
}

// ------------------------------------------------------------ criterion 2

ExperimentConfig coverage_config(TaskKind task) {
  ExperimentConfig c;
  c.population.task = task;
  c.population.size = 2000;
  c.population.predictor_bias = 0.2;
  c.population.predictor_noise_sd = 0.5;
  c.population.logistic_dims = 1;
  c.population.seed = 7;
  c.partition.partition_case = PartitionCase::kCase1;
  c.partition.ratios.assign(5, 1);
  c.partition.lambda = 0.1;
  c.partition.seed = 11;
  c.alpha = 0.1;
  c.estimator.q = 0.5;
  c.population.q = 0.5;
  c.include_centralized = false;
  c.vary_population = true;
  return c;
}

Outcome criterion_2() {
  std::string detail;
  bool pass = true;
  for (TaskKind task : {TaskKind::kMean, TaskKind::kQuantile, TaskKind::kLogistic,
                        TaskKind::kLinear}) {
    auto c = coverage_config(task);
    c.trials = 1000;
    const auto s = run_coverage(c);
    pass = pass && s.coverage >= 0.88;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(task)) +
              " " + fmt("%.3f", s.coverage);
  }
  return {pass, "coverage over 1000 trials: " + detail + " (need >= 0.88)"};
}

// ------------------------------------------------------------ criterion 3

Outcome criterion_3() {
  const std::size_t trials = 200;
  std::size_t narrower = 0;
  const double alpha = 0.1;
  const double z = normal_quantile(1 - alpha / 2);
  std::vector<double> ratio;
  for (std::size_t t = 0; t < trials; ++t) {
    GeneratorOptions g;
    g.task = TaskKind::kMean;
    g.size = 2000;
    g.seed = 300 + t;
    // y = 2 + x + e with x, e ~ N(0, 1): sd(y) = sqrt(2).
    g.predictor_noise_sd = 0.1 * std::sqrt(2.0);
    const auto pop = generate(g);
    PartitionSpec p;
    p.lambda = 0.1;
    p.seed = 900 + t;
    const auto clients = partition(pop, p);
    std::vector<SummaryPayload> payloads;
    std::vector<double> labeled;
    for (const auto& c : clients) {
      payloads.push_back(compute_payload(c, TaskKind::kMean, {}, {}));
      labeled.insert(labeled.end(), c.labeled_y.data(),
                     c.labeled_y.data() + c.labeled_y.size());
    }
    const auto fed = std::get<Interval>(federate(TaskKind::kMean, payloads, {}, alpha, {}));
    const auto m = sample_moments(labeled);
    const double classical = 2 * z * std::sqrt(m.variance / static_cast<double>(labeled.size()));
    if (fed.width() < classical) ++narrower;
    ratio.push_back(fed.width() / classical);
  }
  const double share = static_cast<double>(narrower) / trials;
  return {share >= 0.95, "federated narrower than classical in " +
                             std::to_string(narrower) + "/" + std::to_string(trials) +
                             " trials, median width ratio " +
                             fmt("%.3f", median_of(ratio))};
}

// ------------------------------------------------------------ criterion 4

ExperimentConfig trend_config(double lambda) {
  ExperimentConfig c;
  c.population.task = TaskKind::kMean;
  c.population.size = 2000;
  c.population.seed = 4;
  // The predictor tracks E[y | x]; the irreducible noise dominates f - y.
  c.population.predictor_model = PredictorModel::kConditionalMean;
  c.population.outcome_noise_sd = 3.0;
  c.population.predictor_noise_sd = 0.1;
  c.partition.lambda = lambda;
  c.partition.seed = 40;
  c.trials = 50;
  c.vary_population = false;
  c.include_centralized = false;
  return c;
}

Outcome criterion_4() {
  const double lambdas[] = {0.01, 0.3, 0.5, 0.7};
  std::vector<double> medians;
  std::string detail;
  for (double l : lambdas) {
    medians.push_back(run_coverage(trend_config(l)).median_width);
    detail += std::string(detail.empty() ? "" : ", ") + fmt("lambda %.2f", l) + " " +
              fmt("%.4f", medians.back());
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    decreasing = decreasing && medians[i] < medians[i - 1];
  }
  return {decreasing, "median federated width: " + detail};
}

// ------------------------------------------------------------ criterion 5

Outcome criterion_5() {
  auto c = coverage_config(TaskKind::kMean);
  c.trials = 50;
  c.vary_population = false;
  c.partition.ratios.assign(5, 1);
  const double w5 = run_coverage(c).median_width;
  c.partition.ratios.assign(20, 1);
  const double w20 = run_coverage(c).median_width;
  const double gap = std::abs(w20 - w5) / w5;
  return {gap <= 0.05, "median width K=5 " + fmt("%.4f", w5) + ", K=20 " +
                           fmt("%.4f", w20) + ", relative gap " + fmt("%.4f", gap)};
}

// ------------------------------------------------------------ criterion 6

Outcome criterion_6() {
  bool pass = true;
  std::string detail;
  for (auto pc : {PartitionCase::kCase2, PartitionCase::kCase3}) {
    auto c = coverage_config(TaskKind::kMean);
    c.partition.partition_case = pc;
    c.trials = 500;
    const auto s = run_coverage(c);
    pass = pass && s.coverage >= 0.88 && s.worst_client_miss_rate >= 0.30;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(pc)) +
              " federated coverage " + fmt("%.3f", s.coverage) +
              ", worst client miss rate " + fmt("%.3f", s.worst_client_miss_rate);
  }
  return {pass, detail};
}

// ------------------------------------------------------------ criterion 7

bool networked_matches(TaskKind task, std::size_t k, std::string& why) {
  GeneratorOptions g;
  g.task = task;
  g.size = 800 * k;
  g.seed = 70 + k;
  g.predictor_bias = 0.2;
  g.predictor_noise_sd = 0.4;
  PartitionSpec p;
  p.ratios.assign(k, 1);
  p.lambda = 0.1;
  p.seed = 71 + k;
  const auto clients = partition(generate(g), p);
  const EstimatorOptions options;

  std::vector<RangeInfo> ranges;
  for (const auto& c : clients) ranges.push_back(range_info(c));
  const auto grid = task_grid(task, ranges, options);
  std::vector<SummaryPayload> local;
  for (const auto& c : clients) local.push_back(compute_payload(c, task, grid, options));
  const auto expected = federate(task, local, grid, 0.1, options);

  auto listener = transport::Listener::bind("127.0.0.1", 0);
  transport::SessionConfig session;
  session.expected_clients = k;
  session.task = task;
  session.options = options;
  session.timeout = 30000ms;
  std::vector<std::future<ConfidenceSet>> received;
  for (const auto& c : clients) {
    received.push_back(std::async(std::launch::async, [&, port = listener.port()] {
      transport::ClientOptions o;
      o.port = port;
      o.timeout = 30000ms;
      return transport::run_client(o, c, task, options);
    }));
  }
  const auto outcome = transport::coordinate_session(session, listener);
  bool same = outcome.grid == grid && outcome.federated == expected &&
              outcome.clients.size() == k && outcome.protocol_errors.empty();
  for (std::size_t i = 0; same && i < k; ++i) {
    same = outcome.clients[i].payload == local[i];
  }
  for (auto& r : received) same = (r.get() == expected) && same;
  if (!same) why = std::string(to_string(task)) + " K=" + std::to_string(k);
  return same;
}

bool protocol_errors_reported(std::string& why) {
  GeneratorOptions g;
  g.size = 400;
  PartitionSpec p;
  p.ratios = {1, 1};
  const auto clients = partition(generate(g), p);
  const auto summary = [&](const ClientDataset& c) {
    transport::SummaryMessage m;
    m.session_id = "fedppi";
    m.client_id = c.client_id;
    m.payload = compute_payload(c, TaskKind::kMean, {}, {});
    m.layout = payload_layout(m.payload);
    return m;
  };
  auto listener = transport::Listener::bind("127.0.0.1", 0);
  transport::SessionConfig session;
  session.expected_clients = 2;
  session.timeout = 10000ms;
  auto outcome = std::async(std::launch::async,
                            [&] { return transport::coordinate_session(session, listener); });
  const auto deadline = [] { return transport::Clock::now() + 5s; };
  const auto code_of = [](const transport::Message& m) {
    const auto* e = std::get_if<transport::ErrorMessage>(&m);
    return e ? static_cast<int>(e->code) : -1;
  };
  auto a = transport::Connection::connect("127.0.0.1", listener.port(), 5000ms);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  a.send_bytes(transport::frame(junk));
  const int bad_frame = code_of(a.receive(deadline()));
  a.send(summary(clients[0]));
  std::this_thread::sleep_for(50ms);
  auto b = transport::Connection::connect("127.0.0.1", listener.port(), 5000ms);
  b.send(summary(clients[0]));
  const int duplicate = code_of(b.receive(deadline()));
  auto c = transport::Connection::connect("127.0.0.1", listener.port(), 5000ms);
  c.send(summary(clients[1]));
  const bool finished = std::holds_alternative<transport::ResultMessage>(a.receive(deadline()));
  outcome.get();
  const bool ok = bad_frame == static_cast<int>(transport::ProtocolCode::kBadFrame) &&
                  duplicate == static_cast<int>(transport::ProtocolCode::kDuplicateClient) &&
                  finished;
  if (!ok) why = "protocol error codes " + std::to_string(bad_frame) + "/" +
                 std::to_string(duplicate);
  return ok;
}

Outcome criterion_7() {
  std::string why;
  std::size_t sessions = 0;
  for (TaskKind task : {TaskKind::kMean, TaskKind::kQuantile, TaskKind::kLogistic,
                        TaskKind::kLinear}) {
    for (std::size_t k : {1u, 3u, 5u}) {
      if (!networked_matches(task, k, why)) return {false, "mismatch for " + why};
      ++sessions;
    }
  }
  if (!protocol_errors_reported(why)) return {false, why};
  return {true, std::to_string(sessions) +
                    " loopback sessions bit-identical to in-process; bad frame and "
                    "duplicate id rejected with their protocol codes"};
}

// ------------------------------------------------------------ criterion 8

Outcome criterion_8(const std::vector<std::string>& suites) {
  if (suites.empty()) return {false, "no suite binaries given"};
  const auto start = std::chrono::steady_clock::now();
  std::string failed;
  for (const auto& s : suites) {
    const std::string cmd = s + " --minimal >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) failed += " " + s;
  }
  const double elapsed = Seconds(std::chrono::steady_clock::now() - start).count();
  if (!failed.empty()) return {false, "failing suites:" + failed};
  return {elapsed < 60.0, std::to_string(suites.size()) + " suites passed in " +
                              fmt("%.2f s", elapsed) + " (limit 60 s)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> suites(argv + 1, argv + argc);
  struct Entry {
    int id;
    double limit_s;  // 0: no runtime bound of its own
    std::function<Outcome()> run;
  };
  const Entry entries[] = {
      {1, 10.0, criterion_1},
      {2, 300.0, criterion_2},
      {3, 0.0, criterion_3},
      {4, 0.0, criterion_4},
      {5, 0.0, criterion_5},
      {6, 0.0, criterion_6},
      {7, 0.0, criterion_7},
      {8, 0.0, [&] { return criterion_8(suites); }},
  };
  bool all = true;
  for (const auto& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double elapsed = Seconds(std::chrono::steady_clock::now() - start).count();
    if (e.limit_s > 0 && elapsed >= e.limit_s) {
      o.pass = false;
      o.detail += "; runtime limit " + fmt("%.0f s", e.limit_s) + " exceeded";
    }
    all = all && o.pass;
    std::printf("%s criterion %d: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", e.id,
                o.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
