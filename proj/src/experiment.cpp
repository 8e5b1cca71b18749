#include "fedppi/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fedppi/error.hpp"
#include "fedppi/format.hpp"
#include "fedppi/oracle.hpp"
#include "fedppi/pipeline.hpp"
#include "fedppi/transport.hpp"

namespace fedppi {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool parse_bool(std::string_view text, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorCategory::kValidation,
       std::string(key) + ": expected true or false, got '" +
           std::string(text) + "'");
}

std::size_t parse_count(std::string_view text, std::string_view key) {
  const long long v = parse_integer(text, key);
  require(v >= 0, std::string(key) + " must not be negative");
  return static_cast<std::size_t>(v);
}

std::vector<std::uint32_t> parse_ratios(std::string_view text) {
  std::vector<std::uint32_t> ratios;
  const char sep = text.find(':') != std::string_view::npos ? ':' : ',';
  for (auto part : split(text, sep)) {
    const long long v = parse_integer(trim(part), "ratios");
    require(v >= 0 && v <= 1000000, "ratios: entries must lie in [0, 1e6]");
    ratios.push_back(static_cast<std::uint32_t>(v));
  }
  return ratios;
}

std::string_view to_string(BetweenClientTerm term) {
  return term == BetweenClientTerm::kDiagonal ? "diagonal" : "outer";
}

std::string json_string(std::string_view s) {
  return nlohmann::json(std::string(s)).dump();
}

std::string json_number(double v) {
  return std::isfinite(v) ? format_double(v) : "null";
}

std::size_t report_axis(const ExperimentConfig& config) {
  return config.task() == TaskKind::kLinear ? config.estimator.j_star : 0;
}

ConfidenceSet centralized_set(const ExperimentConfig& config,
                              std::span<const ClientDataset> datasets,
                              const ParamGrid& grid) {
  switch (config.task()) {
    case TaskKind::kMean:
      return mean_interval(pooled_oracle(datasets, SummaryKind::kMean),
                           config.alpha);
    case TaskKind::kQuantile:
      return quantile_set(pooled_oracle(datasets, SummaryKind::kQuantile, grid),
                          grid, config.estimator.q, config.alpha);
    case TaskKind::kLogistic:
      return gradient_set(pooled_oracle(datasets, SummaryKind::kLogistic, grid),
                          grid, config.alpha);
    case TaskKind::kLinear:
      return linear_interval(pooled_linear_oracle(datasets),
                             config.estimator.j_star, config.alpha);
  }
  fail(ErrorCategory::kValidation, "unknown task");
}

struct FederatedRun {
  std::vector<SummaryPayload> payloads;  // client-id order
  std::vector<ConfidenceSet> client_sets;
  ConfidenceSet federated;
  ParamGrid grid;
};

FederatedRun run_in_process(const ExperimentConfig& config,
                            std::span<const ClientDataset> datasets,
                            PhaseTiming& timing) {
  FederatedRun run;
  auto start = Clock::now();
  std::vector<RangeInfo> ranges;
  for (const auto& ds : datasets) ranges.push_back(range_info(ds));
  run.grid = task_grid(config.task(), ranges, config.estimator);
  for (const auto& ds : datasets) {
    run.payloads.push_back(
        compute_payload(ds, config.task(), run.grid, config.estimator));
  }
  timing.summaries = seconds_since(start);
  start = Clock::now();
  run.federated = federate(config.task(), run.payloads, run.grid, config.alpha,
                           config.estimator);
  for (const auto& p : run.payloads) {
    run.client_sets.push_back(federate(config.task(), std::span(&p, 1),
                                       run.grid, config.alpha,
                                       config.estimator));
  }
  timing.federate = seconds_since(start);
  return run;
}

FederatedRun run_networked(const ExperimentConfig& config,
                           std::span<const ClientDataset> datasets,
                           PhaseTiming& timing) {
  auto listener = transport::Listener::bind("127.0.0.1", 0);
  transport::SessionConfig session;
  session.session_id = "experiment";
  session.expected_clients = datasets.size();
  session.alpha = config.alpha;
  session.task = config.task();
  session.options = config.estimator;
  for (const auto& ds : datasets) {
    session.expected_client_ids.push_back(ds.client_id);
  }

  transport::ClientOptions client;
  client.port = listener.port();
  client.session_id = session.session_id;

  const auto start = Clock::now();
  std::vector<std::exception_ptr> failures(datasets.size());
  std::vector<ConfidenceSet> received(datasets.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        received[k] = transport::run_client(client, datasets[k], config.task(),
                                            config.estimator);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    });
  }
  transport::SessionOutcome outcome;
  std::exception_ptr session_failure;
  try {
    outcome = transport::coordinate_session(session, listener);
  } catch (...) {
    session_failure = std::current_exception();
  }
  for (auto& t : threads) t.join();
  if (session_failure) std::rethrow_exception(session_failure);
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (const auto& set : received) {
    if (!(set == outcome.federated)) {
      fail(ErrorCategory::kProtocol,
           "a client received a result different from the coordinator's");
    }
  }
  timing.summaries = seconds_since(start);
  FederatedRun run;
  run.grid = outcome.grid;
  run.federated = outcome.federated;
  for (auto& c : outcome.clients) {
    run.payloads.push_back(std::move(c.payload));
    run.client_sets.push_back(std::move(c.client_set));
  }
  return run;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<const SetReport*> rows_of(const FederationReport& r) {
  std::vector<const SetReport*> rows;
  for (const auto& c : r.clients) rows.push_back(&c);
  rows.push_back(&r.federated);
  if (r.centralized) rows.push_back(&*r.centralized);
  return rows;
}

std::size_t retained_points(const ConfidenceSet& set) {
  if (const auto* g = std::get_if<GridSet>(&set)) return g->count();
  return 0;
}

}  // namespace

std::string_view to_string(RunMode mode) noexcept {
  return mode == RunMode::kInProcess ? "in_process" : "networked";
}

std::string_view to_string(ReportFormat format) noexcept {
  return format == ReportFormat::kCsv ? "csv" : "jsonl";
}

void ExperimentConfig::validate() const {
  require(population.size >= 1, "size must be at least 1");
  require(population.predictor_noise_sd >= 0.0,
          "predictor_noise_sd must not be negative");
  require(population.outcome_noise_sd >= 0.0,
          "outcome_noise_sd must not be negative");
  require(std::isfinite(population.predictor_bias),
          "predictor_bias must be finite");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(trials >= 1, "trials must be at least 1");
  require(estimator.q > 0.0 && estimator.q < 1.0, "q must lie in (0, 1)");
  require(estimator.quantile_grid_points >= 1,
          "quantile_grid_points must be at least 1");
  require(estimator.logistic_grid_points >= 1,
          "logistic_grid_points must be at least 1");
  require(estimator.logistic_lo <= estimator.logistic_hi,
          "logistic_lo must not exceed logistic_hi");
  if (task() == TaskKind::kLinear) {
    require(estimator.j_star < 2,
            "j_star must be 0 (intercept) or 1 (slope) for the linear task");
  }
  if (task() == TaskKind::kLogistic) {
    require(population.logistic_dims >= 1 && population.logistic_dims <= 3,
            "logistic_dims must lie in [1, 3]");
  }
  partition.validate();
}

void apply_setting(ExperimentConfig& c, std::string_view key,
                   std::string_view raw) {
  const std::string_view value = trim(raw);
  const std::string k(key);
  if (k == "version") {
    require(parse_integer(value, k) == kConfigVersion,
            "unsupported config version '" + std::string(value) + "'");
  } else if (k == "task") {
    c.population.task = parse_task_kind(value);
  } else if (k == "size") {
    c.population.size = parse_count(value, k);
  } else if (k == "predictor_bias") {
    c.population.predictor_bias = parse_double(value, k);
  } else if (k == "predictor_noise_sd") {
    c.population.predictor_noise_sd = parse_double(value, k);
  } else if (k == "predictor_model") {
    c.population.predictor_model = parse_predictor_model(value);
  } else if (k == "outcome_noise_sd") {
    c.population.outcome_noise_sd = parse_double(value, k);
  } else if (k == "logistic_dims") {
    c.population.logistic_dims = parse_count(value, k);
  } else if (k == "seed") {
    const auto s = static_cast<std::uint64_t>(parse_count(value, k));
    c.population.seed = s;
    c.partition.seed = s;
  } else if (k == "population_seed") {
    c.population.seed = static_cast<std::uint64_t>(parse_count(value, k));
  } else if (k == "partition_seed") {
    c.partition.seed = static_cast<std::uint64_t>(parse_count(value, k));
  } else if (k == "case" || k == "partition") {
    c.partition.partition_case = parse_partition_case(value);
  } else if (k == "ratios") {
    c.partition.ratios = parse_ratios(value);
  } else if (k == "clients") {
    const auto n = parse_count(value, k);
    require(n >= 1 && n <= 10000, "clients must lie in [1, 10000]");
    c.partition.ratios.assign(n, 1);
  } else if (k == "lambda") {
    c.partition.lambda = parse_double(value, k);
  } else if (k == "alpha") {
    c.alpha = parse_double(value, k);
  } else if (k == "q") {
    c.estimator.q = parse_double(value, k);
    c.population.q = c.estimator.q;
  } else if (k == "j_star") {
    c.estimator.j_star = parse_count(value, k);
  } else if (k == "quantile_grid_points") {
    c.estimator.quantile_grid_points = parse_count(value, k);
  } else if (k == "logistic_grid_points") {
    c.estimator.logistic_grid_points = parse_count(value, k);
  } else if (k == "logistic_lo") {
    c.estimator.logistic_lo = parse_double(value, k);
  } else if (k == "logistic_hi") {
    c.estimator.logistic_hi = parse_double(value, k);
  } else if (k == "between_term") {
    if (value == "diagonal") {
      c.estimator.between_term = BetweenClientTerm::kDiagonal;
    } else if (value == "outer") {
      c.estimator.between_term = BetweenClientTerm::kOuterProduct;
    } else {
      fail(ErrorCategory::kValidation,
           "between_term must be diagonal or outer, got '" +
               std::string(value) + "'");
    }
  } else if (k == "mode") {
    if (value == "in_process") {
      c.mode = RunMode::kInProcess;
    } else if (value == "networked") {
      c.mode = RunMode::kNetworked;
    } else {
      fail(ErrorCategory::kValidation,
           "mode must be in_process or networked, got '" + std::string(value) +
               "'");
    }
  } else if (k == "trials") {
    c.trials = parse_count(value, k);
  } else if (k == "output") {
    c.output = std::string(value);
  } else if (k == "format") {
    if (value == "csv") {
      c.format = ReportFormat::kCsv;
    } else if (value == "jsonl") {
      c.format = ReportFormat::kJsonl;
    } else {
      fail(ErrorCategory::kValidation,
           "format must be csv or jsonl, got '" + std::string(value) + "'");
    }
  } else if (k == "vary_population") {
    c.vary_population = parse_bool(value, k);
  } else if (k == "include_centralized") {
    c.include_centralized = parse_bool(value, k);
  } else {
    fail(ErrorCategory::kValidation, "unknown setting '" + k + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  bool versioned = false;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos,
            "config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    try {
      apply_setting(config, key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.category(),
                  "config line " + std::to_string(line_no) + ": " + e.what());
    }
    if (key == "version") versioned = true;
  }
  require(versioned, "config is missing 'version = " +
                         std::to_string(kConfigVersion) + "'");
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::kIo, "cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  std::string ratios;
  for (std::size_t i = 0; i < c.partition.ratios.size(); ++i) {
    ratios += (i ? ":" : "") + std::to_string(c.partition.ratios[i]);
  }
  out << "version = " << kConfigVersion << "\n"
      << "task = " << to_string(c.population.task) << "\n"
      << "size = " << c.population.size << "\n"
      << "predictor_bias = " << format_double(c.population.predictor_bias) << "\n"
      << "predictor_noise_sd = " << format_double(c.population.predictor_noise_sd)
      << "\n"
      << "predictor_model = " << to_string(c.population.predictor_model) << "\n"
      << "outcome_noise_sd = " << format_double(c.population.outcome_noise_sd)
      << "\n"
      << "logistic_dims = " << c.population.logistic_dims << "\n"
      << "population_seed = " << c.population.seed << "\n"
      << "case = " << to_string(c.partition.partition_case) << "\n"
      << "ratios = " << ratios << "\n"
      << "lambda = " << format_double(c.partition.lambda) << "\n"
      << "partition_seed = " << c.partition.seed << "\n"
      << "alpha = " << format_double(c.alpha) << "\n"
      << "q = " << format_double(c.estimator.q) << "\n"
      << "j_star = " << c.estimator.j_star << "\n"
      << "quantile_grid_points = " << c.estimator.quantile_grid_points << "\n"
      << "logistic_grid_points = " << c.estimator.logistic_grid_points << "\n"
      << "logistic_lo = " << format_double(c.estimator.logistic_lo) << "\n"
      << "logistic_hi = " << format_double(c.estimator.logistic_hi) << "\n"
      << "between_term = " << to_string(c.estimator.between_term) << "\n"
      << "mode = " << to_string(c.mode) << "\n"
      << "trials = " << c.trials << "\n"
      << "format = " << to_string(c.format) << "\n"
      << "vary_population = " << (c.vary_population ? "true" : "false") << "\n"
      << "include_centralized = " << (c.include_centralized ? "true" : "false")
      << "\n";
  if (!c.output.empty()) out << "output = " << c.output.string() << "\n";
  return out.str();
}

SetReport describe_set(std::string entity, const ConfidenceSet& set,
                       std::span<const double> truth, std::size_t axis) {
  SetReport r;
  r.entity = std::move(entity);
  r.set = set;
  if (const auto* iv = std::get_if<Interval>(&set)) {
    r.hull = *iv;
    r.width = iv->width();
    require(axis < truth.size(), "describe_set: truth has no coordinate " +
                                     std::to_string(axis));
    r.covers = iv->contains(truth[axis]);
    return r;
  }
  const auto& gs = std::get<GridSet>(set);
  r.empty = !gs.hull(axis, r.hull);
  r.width = r.empty ? 0.0 : r.hull.width();
  r.covers = !r.empty && truth.size() == gs.grid.dims() && gs.covers(truth);
  return r;
}

FederationReport run_on_population(const ExperimentConfig& config,
                                   const Population& population,
                                   std::uint64_t partition_seed,
                                   std::size_t trial) {
  config.validate();
  FederationReport report;
  report.config = config;
  report.config.partition.seed = partition_seed;
  report.trial = trial;
  report.truth = population.true_theta;
  const std::size_t axis = report_axis(config);
  require(axis < report.truth.size(), "population truth lacks coordinate " +
                                          std::to_string(axis));
  report.target_truth = report.truth[axis];

  auto start = Clock::now();
  const auto datasets = partition(population, report.config.partition);
  report.timing.partition = seconds_since(start);

  const FederatedRun run = config.mode == RunMode::kInProcess
                               ? run_in_process(config, datasets, report.timing)
                               : run_networked(config, datasets, report.timing);
  for (std::size_t k = 0; k < run.payloads.size(); ++k) {
    SetReport r = describe_set(payload_client_id(run.payloads[k]),
                               run.client_sets[k], report.truth, axis);
    r.n_labeled = payload_labeled(run.payloads[k]);
    r.n_unlabeled = payload_unlabeled(run.payloads[k]);
    report.clients.push_back(std::move(r));
  }
  report.federated =
      describe_set("federated", run.federated, report.truth, axis);
  for (const auto& c : report.clients) {
    report.federated.n_labeled += c.n_labeled;
    report.federated.n_unlabeled += c.n_unlabeled;
  }
  if (!run.grid.empty()) report.grid_step = run.grid.step(axis);

  if (config.include_centralized) {
    start = Clock::now();
    SetReport central =
        describe_set("centralized", centralized_set(config, datasets, run.grid),
                     report.truth, axis);
    central.n_labeled = report.federated.n_labeled;
    central.n_unlabeled = report.federated.n_unlabeled;
    report.centralized = std::move(central);
    report.timing.oracle = seconds_since(start);
  }
  return report;
}

FederationReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = Clock::now();
  GeneratorOptions options = config.population;
  options.q = config.estimator.q;
  const Population population = generate(options);
  const double generate_time = seconds_since(start);
  FederationReport report =
      run_on_population(config, population, config.partition.seed, 0);
  report.timing.generate = generate_time;
  return report;
}

CoverageSummary run_coverage(const ExperimentConfig& config,
                             std::size_t threads) {
  config.validate();
  const std::size_t trials = config.trials;
  std::vector<std::optional<FederationReport>> reports(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        GeneratorOptions options = config.population;
        options.q = config.estimator.q;
        if (config.vary_population) options.seed += t;
        const Population population = generate(options);
        reports[t] = run_on_population(config, population,
                                       config.partition.seed + t, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, trials);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  CoverageSummary summary;
  summary.task = config.task();
  summary.trials = trials;
  const std::size_t k = config.partition.clients();
  std::vector<std::size_t> client_hits(k, 0);
  std::size_t hits = 0;
  double width_sum = 0.0;
  for (const auto& r : reports) {
    hits += r->federated.covers ? 1 : 0;
    width_sum += r->federated.width;
    summary.widths.push_back(r->federated.width);
    for (std::size_t c = 0; c < k; ++c) {
      client_hits[c] += r->clients[c].covers ? 1 : 0;
    }
  }
  const double t = static_cast<double>(trials);
  summary.coverage = static_cast<double>(hits) / t;
  summary.std_error = std::sqrt(summary.coverage * (1.0 - summary.coverage) / t);
  summary.mean_width = width_sum / t;
  summary.median_width = median(summary.widths);
  for (std::size_t c = 0; c < k; ++c) {
    const double cov = static_cast<double>(client_hits[c]) / t;
    summary.client_coverage.push_back(cov);
    summary.worst_client_miss_rate =
        std::max(summary.worst_client_miss_rate, 1.0 - cov);
  }
  return summary;
}

std::string report_csv(std::span<const FederationReport> reports) {
  std::ostringstream out;
  out << "trial,estimator,case,clients,lambda,alpha,size,population_seed,"
         "partition_seed,mode,entity,set_kind,n_labeled,n_unlabeled,lo,hi,"
         "width,empty,retained_points,grid_step,truth,covers\n";
  for (const auto& r : reports) {
    const auto& c = r.config;
    for (const SetReport* s : rows_of(r)) {
      const bool grid = std::holds_alternative<GridSet>(s->set);
      out << r.trial << "," << to_string(c.task()) << ","
          << to_string(c.partition.partition_case) << ","
          << c.partition.clients() << "," << format_double(c.partition.lambda)
          << "," << format_double(c.alpha) << "," << c.population.size << ","
          << c.population.seed << "," << c.partition.seed << ","
          << to_string(c.mode) << "," << s->entity << ","
          << (grid ? "grid" : "interval") << "," << s->n_labeled << ","
          << s->n_unlabeled << ",";
      if (s->empty) {
        out << ",,";
      } else {
        out << format_double(s->hull.lo) << "," << format_double(s->hull.hi)
            << ",";
      }
      out << format_double(s->width) << "," << (s->empty ? 1 : 0) << ","
          << retained_points(s->set) << "," << format_double(r.grid_step)
          << "," << format_double(r.target_truth) << ","
          << (s->covers ? 1 : 0) << "\n";
    }
  }
  return out.str();
}

std::string report_jsonl(std::span<const FederationReport> reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    const auto& c = r.config;
    out << "{\"trial\":" << r.trial
        << ",\"estimator\":" << json_string(to_string(c.task()))
        << ",\"config\":" << json_string(format_config(c))
        << ",\"grid_step\":" << json_number(r.grid_step)
        << ",\"truth\":[";
    for (std::size_t i = 0; i < r.truth.size(); ++i) {
      out << (i ? "," : "") << json_number(r.truth[i]);
    }
    out << "],\"target_truth\":" << json_number(r.target_truth)
        << ",\"rows\":[";
    bool first = true;
    for (const SetReport* s : rows_of(r)) {
      out << (first ? "" : ",") << "{\"entity\":" << json_string(s->entity)
          << ",\"set_kind\":"
          << json_string(std::holds_alternative<GridSet>(s->set) ? "grid"
                                                                 : "interval")
          << ",\"n_labeled\":" << s->n_labeled
          << ",\"n_unlabeled\":" << s->n_unlabeled << ",\"lo\":"
          << (s->empty ? "null" : json_number(s->hull.lo)) << ",\"hi\":"
          << (s->empty ? "null" : json_number(s->hull.hi))
          << ",\"width\":" << json_number(s->width)
          << ",\"empty\":" << (s->empty ? "true" : "false")
          << ",\"retained_points\":" << retained_points(s->set)
          << ",\"covers\":" << (s->covers ? "true" : "false") << "}";
      first = false;
    }
    out << "]}\n";
  }
  return out.str();
}

std::string coverage_csv(const CoverageSummary& s) {
  std::ostringstream out;
  out << "estimator,trials,coverage,std_error,mean_width,median_width,"
         "worst_client_miss_rate";
  for (std::size_t k = 0; k < s.client_coverage.size(); ++k) {
    out << "," << client_name(k) << "_coverage";
  }
  out << "\n"
      << to_string(s.task) << "," << s.trials << ","
      << format_double(s.coverage) << "," << format_double(s.std_error) << ","
      << format_double(s.mean_width) << "," << format_double(s.median_width)
      << "," << format_double(s.worst_client_miss_rate);
  for (double c : s.client_coverage) out << "," << format_double(c);
  out << "\n";
  return out.str();
}

void emit_report(std::span<const FederationReport> reports,
                 ReportFormat format, const std::filesystem::path& path) {
  const std::string text =
      format == ReportFormat::kCsv ? report_csv(reports) : report_jsonl(reports);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::kIo, "cannot write report '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) fail(ErrorCategory::kIo, "write failed for report '" + path.string() + "'");
}

}  // namespace fedppi
