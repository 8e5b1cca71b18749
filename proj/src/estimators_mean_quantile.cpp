#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fedppi/error.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/kernels.hpp"

namespace fedppi {
namespace {

void require_both_sides(const ClientDataset& ds, const char* what) {
  ds.validate();
  require(ds.n_labeled() >= 1,
          std::string(what) + ": client '" + ds.client_id +
              "' has no labeled samples");
  require(ds.n_unlabeled() >= 1,
          std::string(what) + ": client '" + ds.client_id +
              "' has no unlabeled samples");
}

}  // namespace

ClientSummary mean_client_summary(const ClientDataset& ds) {
  require_both_sides(ds, "mean_client_summary");
  const auto& k = kernels::active();
  std::vector<double> residual(ds.n_labeled());
  k.subtract(ds.labeled_pred.data(), ds.labeled_y.data(), residual.size(),
             residual.data());
  const MomentSummary fit = kernels::moments(as_span(ds.unlabeled_pred));
  const MomentSummary rect = kernels::moments(residual);

  ClientSummary s;
  s.client_id = ds.client_id;
  s.n_labeled = ds.n_labeled();
  s.n_unlabeled = ds.n_unlabeled();
  s.layout = {1, 1};
  s.coords = {{fit.mean, rect.mean, fit.variance, rect.variance}};
  return s;
}

Interval mean_interval(const GlobalSummary& global, double alpha) {
  require(global.layout == CoordLayout{1, 1} && global.coords.size() == 1,
          "mean_interval: expected a single coordinate");
  const double w = interval_half_widths(global, alpha, 1).front();
  const auto& c = global.coords.front();
  const double center = c.estimate - c.rectifier;
  return Interval(center - w, center + w);
}

Interval mean_federated(std::span<const ClientSummary> summaries,
                        const AggregationWeights& weights, double alpha) {
  return mean_interval(aggregate(summaries, weights), alpha);
}

PredictionRange prediction_range(const ClientDataset& ds) {
  ds.validate();
  require(ds.n_unlabeled() >= 1, "prediction_range: client '" + ds.client_id +
                                     "' has no unlabeled samples");
  PredictionRange r;
  r.min = ds.unlabeled_pred.minCoeff();
  r.max = ds.unlabeled_pred.maxCoeff();
  r.n_labeled = ds.n_labeled();
  r.n_unlabeled = ds.n_unlabeled();
  return r;
}

ParamGrid negotiate_quantile_grid(std::span<const PredictionRange> ranges,
                                  std::size_t points) {
  require(!ranges.empty(), "negotiate_quantile_grid: no clients");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : ranges) {
    require(r.min <= r.max, "negotiate_quantile_grid: invalid range");
    lo = std::min(lo, r.min);
    hi = std::max(hi, r.max);
  }
  return ParamGrid::uniform(lo, hi, points);
}

ClientSummary quantile_client_summary(const ClientDataset& ds,
                                      const ParamGrid& grid) {
  require_both_sides(ds, "quantile_client_summary");
  require(grid.dims() == 1 && !grid.empty(),
          "quantile_client_summary: expected a nonempty 1-D grid");
  const auto unl = as_span(ds.unlabeled_pred);
  const auto y = as_span(ds.labeled_y);
  const auto f = as_span(ds.labeled_pred);
  const double big_n = static_cast<double>(ds.n_unlabeled());
  const double n = static_cast<double>(ds.n_labeled());

  ClientSummary s;
  s.client_id = ds.client_id;
  s.n_labeled = ds.n_labeled();
  s.n_unlabeled = ds.n_unlabeled();
  s.layout = {static_cast<std::uint32_t>(grid.size()), 1};
  s.coords.resize(grid.size());
  const auto& axis = grid.axis(0);
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const double theta = axis[i];
    const double cdf = static_cast<double>(kernels::count_le(unl, theta)) / big_n;
    // Rectifier values are +1 (y <= theta < f), -1 (f <= theta < y) or 0.
    const kernels::PairCounts pc = kernels::count_pair_le(y, f, theta);
    const double plus = static_cast<double>(pc.first_only);
    const double minus = static_cast<double>(pc.second_only);
    const double rect = (plus - minus) / n;
    const double rect_var = std::max(0.0, (plus + minus) / n - rect * rect);
    s.coords[i] = {cdf, rect, cdf * (1.0 - cdf), rect_var};
  }
  return s;
}

GridSet quantile_set(const GlobalSummary& global, const ParamGrid& grid,
                     double q, double alpha) {
  require(q > 0.0 && q < 1.0, "quantile level q must lie in (0, 1)");
  require(grid.dims() == 1 && global.layout.dims == 1 &&
              global.layout.points == grid.size(),
          "quantile_set: summary layout does not match the grid");
  const std::vector<double> w = interval_half_widths(global, alpha, 1);
  GridSet set;
  set.grid = grid;
  set.retained.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& c = global.coords[i];
    set.retained[i] = std::abs(c.estimate + c.rectifier - q) <= w[i] ? 1 : 0;
  }
  return set;
}

GridSet quantile_federated(std::span<const ClientSummary> summaries,
                           const AggregationWeights& weights,
                           const ParamGrid& grid, double q, double alpha) {
  return quantile_set(aggregate(summaries, weights), grid, q, alpha);
}

}  // namespace fedppi
