#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fedppi/dataset.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/federation.hpp"
#include "fedppi/grid.hpp"
#include "fedppi/task.hpp"

namespace fedppi {

/// What one client contributes for a task: grid/coordinate statistics, or
/// the sandwich components for linear regression.
using SummaryPayload = std::variant<ClientSummary, LinearClientSummary>;

const std::string& payload_client_id(const SummaryPayload& payload);
std::uint64_t payload_labeled(const SummaryPayload& payload);
std::uint64_t payload_unlabeled(const SummaryPayload& payload);
/// Linear payloads report {1, d}.
CoordLayout payload_layout(const SummaryPayload& payload);

/// Pre-round information a client reveals for grid construction.
struct RangeInfo {
  PredictionRange range;
  std::uint32_t dims = 1;
};

RangeInfo range_info(const ClientDataset& ds);

/// Grid agreed for the session: quantile grids span the pooled prediction
/// range, logistic grids come from the options. Empty for other tasks.
ParamGrid task_grid(TaskKind task, std::span<const RangeInfo> ranges,
                    const EstimatorOptions& options);

SummaryPayload compute_payload(const ClientDataset& ds, TaskKind task,
                               const ParamGrid& grid,
                               const EstimatorOptions& options);

/// Throws a protocol-category validation error if the payload does not fit
/// the task and grid.
void check_payload_layout(const SummaryPayload& payload, TaskKind task,
                          const ParamGrid& grid);

/// Aggregates in the given order with weights from the payload counts and
/// assembles the confidence set.
ConfidenceSet federate(TaskKind task, std::span<const SummaryPayload> payloads,
                       const ParamGrid& grid, double alpha,
                       const EstimatorOptions& options);

}  // namespace fedppi
