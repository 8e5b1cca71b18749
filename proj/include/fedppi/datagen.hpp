#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedppi/dataset.hpp"
#include "fedppi/task.hpp"

namespace fedppi {

/// What the synthetic predictor tries to reproduce.
enum class PredictorModel {
  kOutcome,          // f = y + bias + noise
  kConditionalMean,  // f = E[y | x] + bias + noise
};

std::string_view to_string(PredictorModel model) noexcept;
PredictorModel parse_predictor_model(std::string_view name);

struct GeneratorOptions {
  TaskKind task = TaskKind::kMean;
  std::size_t size = 2000;
  double predictor_bias = 0.0;
  double predictor_noise_sd = 0.1;
  std::uint64_t seed = 1;
  PredictorModel predictor_model = PredictorModel::kOutcome;
  // Irreducible noise of y around E[y | x].
  double outcome_noise_sd = 1.0;
  // Number of features for the logistic task (no intercept).
  std::size_t logistic_dims = 1;
  // Target quantile level used for true_theta of the quantile task.
  double q = 0.5;
};

/// Full synthetic population with the estimand computed on it directly.
struct Population {
  TaskKind task = TaskKind::kMean;
  Eigen::MatrixXd features;  // size x d
  Eigen::VectorXd outcomes;
  Eigen::VectorXd predictions;
  std::vector<double> true_theta;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(outcomes.size());
  }
  std::size_t dims() const noexcept {
    return static_cast<std::size_t>(features.cols());
  }
};

/// Deterministic in the seed. Data models:
///   mean, quantile  x ~ N(0,1); y = 2 + x + e
///   linear          x ~ N(0,1); features [1, x]; y = 0.5 + 0.938 x + e
///   logistic        x ~ N(0,1)^d; y ~ Bernoulli(sigmoid(x^T beta)),
///                   beta = (1, -0.5, 0.25)[:d]; f = clip(p + bias + noise)
/// with e ~ N(0, outcome_noise_sd^2).
Population generate(const GeneratorOptions& options);

/// Estimand computed directly on a finite population.
std::vector<double> population_truth(TaskKind task,
                                     const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& outcomes,
                                     double q);

enum class PartitionCase { kCase1, kCase2, kCase3 };

std::string_view to_string(PartitionCase c) noexcept;
PartitionCase parse_partition_case(std::string_view name);

struct PartitionSpec {
  PartitionCase partition_case = PartitionCase::kCase1;
  std::vector<std::uint32_t> ratios{1, 1, 1, 1, 1};
  double lambda = 0.1;
  std::uint64_t seed = 1;

  std::size_t clients() const noexcept { return ratios.size(); }
  void validate() const;
};

/// Largest-remainder split of `total` by `ratios`; ties go to the earlier
/// client.
std::vector<std::size_t> apportion(std::size_t total,
                                   std::span<const std::uint32_t> ratios);

/// Labeled count for a client of `size` rows: nearest integer, at least 1.
std::size_t labeled_count(std::size_t size, double lambda);

/// Splits the population into clients:
///   Case1  uniformly shuffled order
///   Case2  sorted by prediction
///   Case3  shuffled first half followed by the second half sorted by
///          prediction
/// Client k takes the next apportioned block; a random lambda fraction of
/// its rows keeps labels.
std::vector<ClientDataset> partition(const Population& population,
                                     const PartitionSpec& spec);

/// Client ids are "client-00", "client-01", ...; zero padding keeps
/// lexicographic and numeric order equal.
std::string client_name(std::size_t index);

// Columnar text files: '#' metadata lines, one header line, comma-separated
// rows, numbers with 17 significant digits.
void write_population_csv(const Population& population,
                          const std::filesystem::path& path);
Population read_population_csv(const std::filesystem::path& path);
void write_client_csv(const ClientDataset& ds,
                      const std::filesystem::path& path);
ClientDataset read_client_csv(const std::filesystem::path& path);

}  // namespace fedppi
