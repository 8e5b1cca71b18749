#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fedppi/datagen.hpp"
#include "fedppi/error.hpp"
#include "fedppi/experiment.hpp"
#include "fedppi/format.hpp"
#include "fedppi/kernels.hpp"
#include "fedppi/transport.hpp"

namespace fs = std::filesystem;
using namespace fedppi;

namespace {

// Settings shared by every verb that builds an ExperimentConfig. Flag names
// are the config keys with '_' replaced by '-'.
const std::vector<std::string> kExperimentKeys = {
    "task",           "size",          "predictor_bias",
    "predictor_noise_sd", "predictor_model", "outcome_noise_sd",
    "logistic_dims",  "seed",          "population_seed",
    "partition_seed", "case",          "ratios",
    "clients",        "lambda",        "alpha",
    "q",              "j_star",        "quantile_grid_points",
    "logistic_grid_points", "logistic_lo", "logistic_hi",
    "between_term",   "mode",          "trials",
    "output",         "format",        "vary_population",
    "include_centralized",
};

const std::vector<std::string> kEstimatorKeys = {
    "alpha", "q", "j_star", "quantile_grid_points", "logistic_grid_points",
    "logistic_lo", "logistic_hi", "between_term",
};

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

struct Settings {
  std::string config_path;
  std::map<std::string, std::string> values;

  void add(CLI::App& app, const std::vector<std::string>& keys,
           bool with_config) {
    if (with_config) {
      app.add_option("--config", config_path,
                     "key = value config file; flags override it");
    }
    for (const auto& key : keys) {
      app.add_option(flag_name(key), values[key]);
    }
  }

  ExperimentConfig build(CLI::App& app) const {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& [key, value] : values) {
      if (app.count(flag_name(key)) > 0) apply_setting(config, key, value);
    }
    config.validate();
    return config;
  }
};

void write_text(const std::string& text, const fs::path& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCategory::kIo, "write failed for '" + path.string() + "'");
}

std::string describe(const ConfidenceSet& set) {
  if (const auto* iv = std::get_if<Interval>(&set)) {
    return "interval [" + format_double(iv->lo) + ", " + format_double(iv->hi) +
           "]";
  }
  const auto& gs = std::get<GridSet>(set);
  std::string text = "grid set, " + std::to_string(gs.count()) + " of " +
                     std::to_string(gs.grid.size()) + " points retained";
  for (std::size_t j = 0; j < gs.grid.dims(); ++j) {
    Interval hull;
    if (gs.hull(j, hull)) {
      text += "; axis " + std::to_string(j) + " hull [" +
              format_double(hull.lo) + ", " + format_double(hull.hi) + "]";
    }
  }
  return text;
}

std::string session_csv(const transport::SessionOutcome& outcome) {
  std::string text =
      "entity,set_kind,n_labeled,n_unlabeled,lo,hi,width,empty,"
      "retained_points\n";
  const auto row = [&](const std::string& entity, const ConfidenceSet& set,
                       std::uint64_t n, std::uint64_t big_n) {
    const auto* gs = std::get_if<GridSet>(&set);
    // No truth is known here; a placeholder keeps describe_set usable.
    const std::vector<double> origin(gs ? gs->grid.dims() : 1, 0.0);
    const SetReport r = describe_set(entity, set, origin, 0);
    text += entity + "," + (gs ? "grid" : "interval") + "," +
            std::to_string(n) + "," + std::to_string(big_n) + ",";
    text += r.empty ? std::string(",,")
                    : format_double(r.hull.lo) + "," + format_double(r.hull.hi) +
                          ",";
    text += format_double(r.width) + "," + (r.empty ? "1" : "0") + "," +
            std::to_string(gs ? gs->count() : 0) + "\n";
  };
  std::uint64_t n = 0;
  std::uint64_t big_n = 0;
  for (const auto& c : outcome.clients) {
    row(payload_client_id(c.payload), c.client_set,
        payload_labeled(c.payload), payload_unlabeled(c.payload));
    n += payload_labeled(c.payload);
    big_n += payload_unlabeled(c.payload);
  }
  row("federated", outcome.federated, n, big_n);
  return text;
}

int cmd_generate(const ExperimentConfig& config, const fs::path& out_dir) {
  GeneratorOptions options = config.population;
  options.q = config.estimator.q;
  const Population population = generate(options);
  fs::create_directories(out_dir);
  write_population_csv(population, out_dir / "population.csv");
  const auto clients = partition(population, config.partition);
  for (const auto& ds : clients) {
    write_client_csv(ds, out_dir / (ds.client_id + ".csv"));
  }
  write_text(format_config(config), out_dir / "config.txt");
  std::cout << "wrote population of " << population.size() << " rows and "
            << clients.size() << " client files to " << out_dir.string()
            << "\n";
  return 0;
}

int cmd_run(const ExperimentConfig& config) {
  const FederationReport report = run_experiment(config);
  const std::vector<FederationReport> reports{report};
  if (config.output.empty()) {
    std::cout << (config.format == ReportFormat::kCsv ? report_csv(reports)
                                                      : report_jsonl(reports));
  } else {
    emit_report(reports, config.format, config.output);
  }
  const auto& t = report.timing;
  std::fprintf(stderr,
               "timing (s): generate %.4f partition %.4f summaries %.4f "
               "federate %.4f oracle %.4f\n",
               t.generate, t.partition, t.summaries, t.federate, t.oracle);
  return 0;
}

int cmd_coverage(ExperimentConfig config, std::size_t threads,
                 bool keep_centralized) {
  if (!keep_centralized) config.include_centralized = false;
  const auto start = std::chrono::steady_clock::now();
  const CoverageSummary summary = run_coverage(config, threads);
  write_text(coverage_csv(summary), config.output);
  std::fprintf(stderr, "%zu trials in %.2f s\n", summary.trials,
               std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
                   .count());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated prediction-powered inference toolkit"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "kernel set: scalar or avx2 (default: detect)");

  Settings gen_settings;
  std::string out_dir = "fedppi-data";
  auto* gen = app.add_subcommand("generate",
                                 "write a synthetic population and client files");
  gen_settings.add(*gen, kExperimentKeys, true);
  gen->add_option("--out-dir", out_dir, "directory for the CSV files");

  Settings run_settings;
  auto* run = app.add_subcommand("run", "run one experiment and emit a report");
  run_settings.add(*run, kExperimentKeys, true);

  Settings cov_settings;
  std::size_t threads = 0;
  bool keep_centralized = false;
  auto* cov = app.add_subcommand("coverage", "Monte-Carlo coverage of the federated set");
  cov_settings.add(*cov, kExperimentKeys, true);
  cov->add_option("--threads", threads, "worker threads (0: all cores)");
  cov->add_flag("--with-centralized", keep_centralized,
                "also compute the pooled set in every trial");

  Settings serve_settings;
  std::string serve_host = "127.0.0.1";
  std::uint16_t serve_port = 7411;
  std::size_t expected = 1;
  std::string serve_task = "mean";
  std::string session_id = "fedppi";
  double timeout_s = 30.0;
  std::string serve_output;
  std::vector<std::string> expected_ids;
  auto* serve = app.add_subcommand("serve", "coordinate one federated session");
  serve_settings.add(*serve, kEstimatorKeys, false);
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);
  serve->add_option("--expect", expected, "number of clients K")->required();
  serve->add_option("--task", serve_task)->required();
  serve->add_option("--session", session_id);
  serve->add_option("--timeout", timeout_s, "seconds");
  serve->add_option("--expect-id", expected_ids,
                    "client ids that must take part (repeatable)");
  serve->add_option("--report", serve_output, "CSV report path");

  Settings client_settings;
  std::string client_host = "127.0.0.1";
  std::uint16_t client_port = 7411;
  std::string client_task = "mean";
  std::string data_path;
  std::string client_session = "fedppi";
  double client_timeout_s = 30.0;
  auto* client = app.add_subcommand("client", "join a session with one client file");
  client_settings.add(*client, kEstimatorKeys, false);
  client->add_option("--host", client_host);
  client->add_option("--port", client_port);
  client->add_option("--task", client_task)->required();
  client->add_option("--data", data_path, "client CSV from 'generate'")->required();
  client->add_option("--session", client_session);
  client->add_option("--timeout", client_timeout_s, "seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kValidation);
  }

  try {
    if (!isa.empty()) {
      if (isa == "scalar") {
        kernels::set_active_isa(kernels::Isa::kScalar);
      } else if (isa == "avx2") {
        require(kernels::isa_available(kernels::Isa::kAvx2),
                "AVX2 kernels are not available on this machine");
        kernels::set_active_isa(kernels::Isa::kAvx2);
      } else {
        fail(ErrorCategory::kValidation, "--isa must be scalar or avx2");
      }
    }
    if (gen->parsed()) return cmd_generate(gen_settings.build(*gen), out_dir);
    if (run->parsed()) return cmd_run(run_settings.build(*run));
    if (cov->parsed()) {
      return cmd_coverage(cov_settings.build(*cov), threads, keep_centralized);
    }
    if (serve->parsed()) {
      ExperimentConfig est = serve_settings.build(*serve);
      transport::SessionConfig session;
      session.session_id = session_id;
      session.expected_clients = expected;
      session.alpha = est.alpha;
      session.task = parse_task_kind(serve_task);
      session.options = est.estimator;
      session.expected_client_ids = expected_ids;
      session.timeout =
          std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
      session.validate();
      auto listener = transport::Listener::bind(serve_host, serve_port);
      std::fprintf(stderr, "listening on %s:%u for %zu clients\n",
                   serve_host.c_str(), listener.port(), expected);
      const auto outcome = transport::coordinate_session(session, listener);
      for (const auto& e : outcome.protocol_errors) {
        std::fprintf(stderr, "rejected frame: %s\n", e.text.c_str());
      }
      const std::string report = session_csv(outcome);
      if (serve_output.empty()) {
        std::cout << report;
      } else {
        write_text(report, serve_output);
      }
      std::cout << "federated: " << describe(outcome.federated) << "\n";
      return 0;
    }
    if (client->parsed()) {
      ExperimentConfig est = client_settings.build(*client);
      transport::ClientOptions options;
      options.host = client_host;
      options.port = client_port;
      options.session_id = client_session;
      options.timeout = std::chrono::milliseconds(
          static_cast<long long>(client_timeout_s * 1000));
      const ClientDataset ds = read_client_csv(data_path);
      const ConfidenceSet set = transport::run_client(
          options, ds, parse_task_kind(client_task), est.estimator);
      std::cout << ds.client_id << " received federated " << describe(set)
                << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n",
                 std::string(category_name(e.category())).c_str(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
