#include "fedppi/oracle.hpp"

#include "fedppi/error.hpp"

namespace fedppi {

ClientSummary client_summary(const ClientDataset& ds, SummaryKind kind,
                             const ParamGrid& grid) {
  switch (kind) {
    case SummaryKind::kMean:
      return mean_client_summary(ds);
    case SummaryKind::kQuantile:
      return quantile_client_summary(ds, grid);
    case SummaryKind::kLogistic:
      return logistic_client_summary(ds, grid);
    case SummaryKind::kLinearGradient:
      return linear_gradient_client_summary(ds, grid);
  }
  fail(ErrorCategory::kValidation, "unknown summary kind");
}

GlobalSummary pooled_oracle(std::span<const ClientDataset> datasets,
                            SummaryKind kind, const ParamGrid& grid) {
  require(!datasets.empty(), "pooled_oracle: no datasets");
  const ClientDataset pooled = concatenate(datasets, "pooled");
  require(pooled.n_labeled() + pooled.n_unlabeled() > 0,
          "pooled_oracle: the union of client data is empty");
  return as_global(client_summary(pooled, kind, grid));
}

LinearGlobalSummary pooled_linear_oracle(
    std::span<const ClientDataset> datasets) {
  require(!datasets.empty(), "pooled_linear_oracle: no datasets");
  return as_linear_global(
      linear_client_summary(concatenate(datasets, "pooled")));
}

}  // namespace fedppi
