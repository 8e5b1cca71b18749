#include "fedppi/pipeline.hpp"

#include <string>

#include "fedppi/error.hpp"

namespace fedppi {

const std::string& payload_client_id(const SummaryPayload& payload) {
  return std::visit(
      [](const auto& s) -> const std::string& { return s.client_id; }, payload);
}

std::uint64_t payload_labeled(const SummaryPayload& payload) {
  return std::visit([](const auto& s) { return s.n_labeled; }, payload);
}

std::uint64_t payload_unlabeled(const SummaryPayload& payload) {
  return std::visit([](const auto& s) { return s.n_unlabeled; }, payload);
}

CoordLayout payload_layout(const SummaryPayload& payload) {
  if (const auto* s = std::get_if<ClientSummary>(&payload)) return s->layout;
  return {1, static_cast<std::uint32_t>(
                 std::get<LinearClientSummary>(payload).dims())};
}

RangeInfo range_info(const ClientDataset& ds) {
  return {prediction_range(ds), static_cast<std::uint32_t>(ds.dims())};
}

ParamGrid task_grid(TaskKind task, std::span<const RangeInfo> ranges,
                    const EstimatorOptions& options) {
  switch (task) {
    case TaskKind::kQuantile: {
      std::vector<PredictionRange> r;
      for (const auto& info : ranges) r.push_back(info.range);
      return negotiate_quantile_grid(r, options.quantile_grid_points);
    }
    case TaskKind::kLogistic: {
      require(!ranges.empty(), "task_grid: no clients");
      const std::uint32_t dims = ranges.front().dims;
      for (const auto& info : ranges) {
        require(info.dims == dims, "task_grid: clients disagree on dimension");
      }
      if (dims > options.max_logistic_dims) {
        fail(ErrorCategory::kUnsupportedDimension,
             "logistic grid search supports at most " +
                 std::to_string(options.max_logistic_dims) + " features");
      }
      return ParamGrid::cube(dims, options.logistic_lo, options.logistic_hi,
                             options.logistic_grid_points);
    }
    case TaskKind::kMean:
    case TaskKind::kLinear:
      return {};
  }
  return {};
}

SummaryPayload compute_payload(const ClientDataset& ds, TaskKind task,
                               const ParamGrid& grid,
                               const EstimatorOptions& options) {
  switch (task) {
    case TaskKind::kMean:
      return mean_client_summary(ds);
    case TaskKind::kQuantile:
      return quantile_client_summary(ds, grid);
    case TaskKind::kLogistic:
      return logistic_client_summary(ds, grid, options.max_logistic_dims);
    case TaskKind::kLinear:
      return linear_client_summary(ds);
  }
  fail(ErrorCategory::kValidation, "unknown task");
}

void check_payload_layout(const SummaryPayload& payload, TaskKind task,
                          const ParamGrid& grid) {
  const auto mismatch = [&](const std::string& why) {
    fail(ErrorCategory::kProtocol, "summary from '" +
                                       payload_client_id(payload) +
                                       "' does not fit the session: " + why);
  };
  if (task == TaskKind::kLinear) {
    if (!std::holds_alternative<LinearClientSummary>(payload)) {
      mismatch("expected a linear summary");
    }
    try {
      std::get<LinearClientSummary>(payload).validate();
    } catch (const Error& e) {
      mismatch(e.what());
    }
    return;
  }
  if (!std::holds_alternative<ClientSummary>(payload)) {
    mismatch("expected a coordinate summary");
  }
  const auto& s = std::get<ClientSummary>(payload);
  CoordLayout expected{1, 1};
  if (task == TaskKind::kQuantile || task == TaskKind::kLogistic) {
    expected = {static_cast<std::uint32_t>(grid.size()),
                static_cast<std::uint32_t>(grid.dims())};
  }
  if (s.layout != expected) {
    mismatch("layout " + std::to_string(s.layout.points) + "x" +
             std::to_string(s.layout.dims) + ", expected " +
             std::to_string(expected.points) + "x" +
             std::to_string(expected.dims));
  }
  try {
    s.validate();
  } catch (const Error& e) {
    mismatch(e.what());
  }
}

ConfidenceSet federate(TaskKind task, std::span<const SummaryPayload> payloads,
                       const ParamGrid& grid, double alpha,
                       const EstimatorOptions& options) {
  require(!payloads.empty(), "federate: no client summaries");
  if (task == TaskKind::kLinear) {
    std::vector<LinearClientSummary> linear;
    for (const auto& p : payloads) linear.push_back(std::get<LinearClientSummary>(p));
    return linear_federated(linear, compute_weights(linear), options.j_star,
                            alpha, options.between_term);
  }
  std::vector<ClientSummary> summaries;
  for (const auto& p : payloads) summaries.push_back(std::get<ClientSummary>(p));
  const AggregationWeights weights = compute_weights(summaries);
  switch (task) {
    case TaskKind::kMean:
      return mean_federated(summaries, weights, alpha);
    case TaskKind::kQuantile:
      return quantile_federated(summaries, weights, grid, options.q, alpha);
    case TaskKind::kLogistic:
      return logistic_federated(summaries, weights, grid, alpha);
    case TaskKind::kLinear:
      break;
  }
  fail(ErrorCategory::kValidation, "unknown task");
}

}  // namespace fedppi
