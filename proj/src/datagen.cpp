#include "fedppi/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedppi/error.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/rng.hpp"

namespace fedppi {
namespace {

constexpr double kLogisticBeta[] = {1.0, -0.5, 0.25};

std::vector<double> logistic_mle(const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x.cols());
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd mu =
        (x * theta).unaryExpr([](double z) { return sigmoid(z); });
    const Eigen::VectorXd grad = x.transpose() * (y - mu);
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    theta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return {theta.data(), theta.data() + theta.size()};
}

}  // namespace

std::string_view to_string(PredictorModel model) noexcept {
  return model == PredictorModel::kOutcome ? "outcome" : "conditional_mean";
}

PredictorModel parse_predictor_model(std::string_view name) {
  if (name == "outcome") return PredictorModel::kOutcome;
  if (name == "conditional_mean") return PredictorModel::kConditionalMean;
  fail(ErrorCategory::kValidation,
       "unknown predictor model '" + std::string(name) + "'");
}

std::vector<double> population_truth(TaskKind task,
                                     const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& outcomes,
                                     double q) {
  require(outcomes.size() > 0, "population_truth: empty population");
  switch (task) {
    case TaskKind::kMean:
      return {outcomes.mean()};
    case TaskKind::kQuantile: {
      require(q > 0.0 && q < 1.0, "quantile level q must lie in (0, 1)");
      std::vector<double> sorted(outcomes.data(),
                                 outcomes.data() + outcomes.size());
      std::sort(sorted.begin(), sorted.end());
      // Smallest theta whose empirical CDF reaches q.
      const auto rank = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(sorted.size())));
      return {sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1]};
    }
    case TaskKind::kLinear: {
      const Eigen::VectorXd beta =
          features.colPivHouseholderQr().solve(outcomes);
      return {beta.data(), beta.data() + beta.size()};
    }
    case TaskKind::kLogistic:
      return logistic_mle(features, outcomes);
  }
  return {};
}

Population generate(const GeneratorOptions& o) {
  require(o.size >= 10, "population size must be at least 10");
  require(o.predictor_noise_sd >= 0.0 && o.outcome_noise_sd >= 0.0,
          "noise standard deviations must be nonnegative");
  require(std::isfinite(o.predictor_bias), "predictor bias must be finite");

  Rng rng(o.seed);
  const auto size = static_cast<Eigen::Index>(o.size);
  Population pop;
  pop.task = o.task;
  pop.outcomes.resize(size);
  pop.predictions.resize(size);

  switch (o.task) {
    case TaskKind::kMean:
    case TaskKind::kQuantile:
    case TaskKind::kLinear: {
      const bool linear = o.task == TaskKind::kLinear;
      pop.features.resize(size, linear ? 2 : 1);
      for (Eigen::Index i = 0; i < size; ++i) {
        const double x = rng.normal();
        const double e = rng.normal(0.0, o.outcome_noise_sd);
        const double noise = rng.normal(0.0, o.predictor_noise_sd);
        const double signal = linear ? 0.5 + 0.938 * x : 2.0 + x;
        if (linear) {
          pop.features(i, 0) = 1.0;
          pop.features(i, 1) = x;
        } else {
          pop.features(i, 0) = x;
        }
        pop.outcomes[i] = signal + e;
        const double base = o.predictor_model == PredictorModel::kOutcome
                                ? pop.outcomes[i]
                                : signal;
        pop.predictions[i] = base + o.predictor_bias + noise;
      }
      break;
    }
    case TaskKind::kLogistic: {
      require(o.logistic_dims >= 1 && o.logistic_dims <= 3,
              "logistic populations support 1 to 3 features");
      const auto d = static_cast<Eigen::Index>(o.logistic_dims);
      pop.features.resize(size, d);
      for (Eigen::Index i = 0; i < size; ++i) {
        double z = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
          pop.features(i, j) = rng.normal();
          z += kLogisticBeta[j] * pop.features(i, j);
        }
        const double p = sigmoid(z);
        pop.outcomes[i] = rng.bernoulli(p) ? 1.0 : 0.0;
        const double noise = rng.normal(0.0, o.predictor_noise_sd);
        pop.predictions[i] =
            std::clamp(p + o.predictor_bias + noise, 0.0, 1.0);
      }
      break;
    }
  }
  pop.true_theta = population_truth(o.task, pop.features, pop.outcomes, o.q);
  return pop;
}

std::string_view to_string(PartitionCase c) noexcept {
  switch (c) {
    case PartitionCase::kCase1: return "case1";
    case PartitionCase::kCase2: return "case2";
    case PartitionCase::kCase3: return "case3";
  }
  return "unknown";
}

PartitionCase parse_partition_case(std::string_view name) {
  if (name == "case1" || name == "1") return PartitionCase::kCase1;
  if (name == "case2" || name == "2") return PartitionCase::kCase2;
  if (name == "case3" || name == "3") return PartitionCase::kCase3;
  fail(ErrorCategory::kValidation,
       "unknown partition case '" + std::string(name) + "'");
}

void PartitionSpec::validate() const {
  require(!ratios.empty(), "partition needs at least one client");
  for (auto r : ratios) require(r > 0, "partition ratios must be positive");
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
}

std::vector<std::size_t> apportion(std::size_t total,
                                   std::span<const std::uint32_t> ratios) {
  require(!ratios.empty(), "apportion: no ratios");
  std::uint64_t sum = 0;
  for (auto r : ratios) sum += r;
  require(sum > 0, "apportion: ratios sum to zero");
  std::vector<std::size_t> sizes(ratios.size());
  std::vector<std::uint64_t> remainder(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    const std::uint64_t scaled = static_cast<std::uint64_t>(total) * ratios[k];
    sizes[k] = static_cast<std::size_t>(scaled / sum);
    remainder[k] = scaled % sum;
    assigned += sizes[k];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    ++sizes[order[i % order.size()]];
  }
  return sizes;
}

std::size_t labeled_count(std::size_t size, double lambda) {
  const long long rounded = std::llround(lambda * static_cast<double>(size));
  return rounded < 1 ? 1 : static_cast<std::size_t>(rounded);
}

std::string client_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return "client-" + digits;
}

std::vector<ClientDataset> partition(const Population& population,
                                     const PartitionSpec& spec) {
  spec.validate();
  const std::size_t total = population.size();
  require(total > 0, "partition: empty population");
  Rng rng(spec.seed);

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto by_prediction = [&](std::size_t a, std::size_t b) {
    return population.predictions[static_cast<Eigen::Index>(a)] <
           population.predictions[static_cast<Eigen::Index>(b)];
  };
  switch (spec.partition_case) {
    case PartitionCase::kCase1:
      rng.shuffle(std::span<std::size_t>(order));
      break;
    case PartitionCase::kCase2:
      std::stable_sort(order.begin(), order.end(), by_prediction);
      break;
    case PartitionCase::kCase3: {
      rng.shuffle(std::span<std::size_t>(order));
      const auto mid = order.begin() + static_cast<std::ptrdiff_t>(total / 2);
      std::stable_sort(mid, order.end(), by_prediction);
      break;
    }
  }

  const std::vector<std::size_t> sizes = apportion(total, spec.ratios);
  const auto d = population.features.cols();
  std::vector<ClientDataset> clients(sizes.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::size_t size = sizes[k];
    const std::string id = client_name(k);
    if (size == 0) {
      fail(ErrorCategory::kValidation,
           "partition: client '" + id + "' receives 0 labeled samples");
    }
    const std::size_t n = labeled_count(size, spec.lambda);
    if (n >= size) {
      fail(ErrorCategory::kValidation,
           "partition: client '" + id + "' has no unlabeled samples left");
    }
    std::vector<std::size_t> local(size);
    std::iota(local.begin(), local.end(), 0);
    rng.shuffle(std::span<std::size_t>(local));
    std::vector<std::uint8_t> is_labeled(size, 0);
    for (std::size_t i = 0; i < n; ++i) is_labeled[local[i]] = 1;

    ClientDataset& ds = clients[k];
    ds.client_id = id;
    ds.labeled_x.resize(static_cast<Eigen::Index>(n), d);
    ds.labeled_y.resize(static_cast<Eigen::Index>(n));
    ds.labeled_pred.resize(static_cast<Eigen::Index>(n));
    ds.unlabeled_x.resize(static_cast<Eigen::Index>(size - n), d);
    ds.unlabeled_pred.resize(static_cast<Eigen::Index>(size - n));
    Eigen::Index li = 0;
    Eigen::Index ui = 0;
    for (std::size_t i = 0; i < size; ++i) {
      const auto src = static_cast<Eigen::Index>(order[offset + i]);
      if (is_labeled[i]) {
        ds.labeled_x.row(li) = population.features.row(src);
        ds.labeled_y[li] = population.outcomes[src];
        ds.labeled_pred[li] = population.predictions[src];
        ds.labeled_rows.push_back(order[offset + i]);
        ++li;
      } else {
        ds.unlabeled_x.row(ui) = population.features.row(src);
        ds.unlabeled_pred[ui] = population.predictions[src];
        ds.unlabeled_rows.push_back(order[offset + i]);
        ++ui;
      }
    }
    offset += size;
  }
  return clients;
}

}  // namespace fedppi
