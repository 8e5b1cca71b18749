#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedppi/datagen.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/grid.hpp"
#include "fedppi/stats.hpp"

namespace fedppi {

enum class RunMode { kInProcess, kNetworked };
enum class ReportFormat { kCsv, kJsonl };

std::string_view to_string(RunMode mode) noexcept;
std::string_view to_string(ReportFormat format) noexcept;

struct ExperimentConfig {
  GeneratorOptions population;
  PartitionSpec partition;
  double alpha = 0.1;
  EstimatorOptions estimator;
  RunMode mode = RunMode::kInProcess;
  std::size_t trials = 1;
  std::filesystem::path output;
  ReportFormat format = ReportFormat::kCsv;
  // Coverage runs: advance the population seed with the trial index too.
  bool vary_population = true;
  // Skip the pooled computation (coverage runs do not need it).
  bool include_centralized = true;

  TaskKind task() const noexcept { return population.task; }
  void validate() const;
};

inline constexpr int kConfigVersion = 1;

/// Flat `key = value` lines, '#' comments, and a mandatory `version = 1`.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one setting; keys match the config file and CLI flag names.
void apply_setting(ExperimentConfig& config, std::string_view key,
                   std::string_view value);
/// Canonical text form accepted by parse_config.
std::string format_config(const ExperimentConfig& config);

struct SetReport {
  std::string entity;  // client id, "federated" or "centralized"
  ConfidenceSet set;
  std::uint64_t n_labeled = 0;
  std::uint64_t n_unlabeled = 0;
  // Extent along the reported coordinate; meaningless when `empty`.
  Interval hull;
  bool empty = false;
  double width = 0.0;
  bool covers = false;
};

struct PhaseTiming {
  double generate = 0.0;
  double partition = 0.0;
  double summaries = 0.0;
  double federate = 0.0;
  double oracle = 0.0;
};

struct FederationReport {
  ExperimentConfig config;
  std::size_t trial = 0;
  std::vector<double> truth;
  double target_truth = 0.0;  // coordinate shown in the report
  std::vector<SetReport> clients;
  SetReport federated;
  std::optional<SetReport> centralized;
  // Grid resolution behind the "covers" flag of grid sets; 0 for intervals.
  double grid_step = 0.0;
  PhaseTiming timing;
};

FederationReport run_experiment(const ExperimentConfig& config);

/// Runs the pipeline on a given population; the partition uses
/// `partition_seed`.
FederationReport run_on_population(const ExperimentConfig& config,
                                   const Population& population,
                                   std::uint64_t partition_seed,
                                   std::size_t trial = 0);

struct CoverageSummary {
  TaskKind task = TaskKind::kMean;
  std::size_t trials = 0;
  double coverage = 0.0;
  double std_error = 0.0;  // binomial
  double mean_width = 0.0;
  double median_width = 0.0;
  std::vector<double> client_coverage;
  // Largest per-client miss rate.
  double worst_client_miss_rate = 0.0;
  std::vector<double> widths;
};

/// Trial t uses population seed + t (when vary_population) and partition
/// seed + t. Trials may run in parallel; results do not depend on that.
CoverageSummary run_coverage(const ExperimentConfig& config,
                             std::size_t threads = 0);

std::string report_csv(std::span<const FederationReport> reports);
std::string report_jsonl(std::span<const FederationReport> reports);
std::string coverage_csv(const CoverageSummary& summary);
/// Writes the report in the given format; I/O failures carry the path.
void emit_report(std::span<const FederationReport> reports,
                 ReportFormat format, const std::filesystem::path& path);

/// Hull/width/cover flag of a set against the truth.
SetReport describe_set(std::string entity, const ConfidenceSet& set,
                       std::span<const double> truth, std::size_t axis);

}  // namespace fedppi
