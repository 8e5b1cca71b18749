#pragma once

#include <span>

#include "fedppi/dataset.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/federation.hpp"
#include "fedppi/grid.hpp"

namespace fedppi {

/// Which per-client statistic a summary carries.
enum class SummaryKind { kMean, kQuantile, kLogistic, kLinearGradient };

/// Dispatches to the matching *_client_summary. Grid kinds need `grid`.
ClientSummary client_summary(const ClientDataset& ds, SummaryKind kind,
                             const ParamGrid& grid = {});

/// Direct computation on the union of all client data. Test and simulation
/// use only: it needs the raw samples.
GlobalSummary pooled_oracle(std::span<const ClientDataset> datasets,
                            SummaryKind kind, const ParamGrid& grid = {});

LinearGlobalSummary pooled_linear_oracle(
    std::span<const ClientDataset> datasets);

}  // namespace fedppi
