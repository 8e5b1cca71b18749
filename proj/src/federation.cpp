#include "fedppi/federation.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fedppi/error.hpp"

namespace fedppi {

AggregationWeights AggregationWeights::from_values(std::vector<double> values) {
  require(!values.empty(), "aggregation weights: empty");
  double total = 0.0;
  for (double w : values) {
    require(std::isfinite(w) && w >= 0.0,
            "aggregation weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    fail(ErrorCategory::kValidation,
         "aggregation weights sum to " + std::to_string(total));
  }
  return AggregationWeights(std::move(values));
}

AggregationWeights compute_weights(std::span<const std::uint64_t> labeled,
                                   std::span<const std::uint64_t> unlabeled) {
  require(labeled.size() == unlabeled.size(),
          "compute_weights: count vectors differ in length");
  require(!labeled.empty(), "compute_weights: no clients");
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    total += labeled[k] + unlabeled[k];
  }
  require(total > 0, "compute_weights: every client has zero samples");
  std::vector<double> w(labeled.size());
  const double denom = static_cast<double>(total);
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    w[k] = static_cast<double>(labeled[k] + unlabeled[k]) / denom;
  }
  return AggregationWeights::from_values(std::move(w));
}

AggregationWeights compute_weights(std::span<const ClientSummary> summaries) {
  std::vector<std::uint64_t> n;
  std::vector<std::uint64_t> big_n;
  for (const auto& s : summaries) {
    n.push_back(s.n_labeled);
    big_n.push_back(s.n_unlabeled);
  }
  return compute_weights(n, big_n);
}

void ClientSummary::validate() const {
  const std::string who = "summary '" + client_id + "': ";
  require(!coords.empty(), who + "no coordinates");
  require(coords.size() == layout.size(),
          who + "coordinate count does not match layout");
  require(n_labeled > 0 || n_unlabeled > 0, who + "no samples");
  for (const auto& c : coords) {
    require(c.var_estimate >= 0.0 && c.var_rectifier >= 0.0,
            who + "variances must be nonnegative");
  }
}

GlobalSummary aggregate(std::span<const ClientSummary> summaries,
                        const AggregationWeights& weights) {
  require(!summaries.empty(), "aggregate: no summaries");
  require(weights.size() == summaries.size(),
          "aggregate: weight count does not match summary count");
  const CoordLayout layout = summaries.front().layout;
  for (const auto& s : summaries) {
    s.validate();
    require(s.layout == layout,
            "aggregate: coordinate layout mismatch for '" + s.client_id + "'");
  }

  GlobalSummary global;
  global.layout = layout;
  for (const auto& s : summaries) {
    global.total_labeled += s.n_labeled;
    global.total_unlabeled += s.n_unlabeled;
  }
  global.coords.resize(layout.size());

  const std::size_t k_count = summaries.size();
  std::vector<WeightedMoments> fit(k_count);
  std::vector<WeightedMoments> rect(k_count);
  for (std::size_t c = 0; c < layout.size(); ++c) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& s = summaries[k];
      const auto& v = s.coords[c];
      fit[k] = {weights[k], {v.estimate, v.var_estimate, s.n_unlabeled}};
      rect[k] = {weights[k], {v.rectifier, v.var_rectifier, s.n_labeled}};
    }
    const MomentSummary f = merge_moments(fit);
    const MomentSummary r = merge_moments(rect);
    global.coords[c] = {f.mean, r.mean, f.variance, r.variance};
  }
  return global;
}

GlobalSummary as_global(const ClientSummary& summary) {
  summary.validate();
  GlobalSummary g;
  g.layout = summary.layout;
  g.coords = summary.coords;
  g.total_labeled = summary.n_labeled;
  g.total_unlabeled = summary.n_unlabeled;
  return g;
}

std::vector<double> interval_half_widths(const GlobalSummary& global,
                                         double alpha, std::size_t dims) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(dims >= 1, "dims must be positive");
  require(global.total_unlabeled > 0,
          "interval needs N > 0 unlabeled samples");
  require(global.total_labeled > 0, "interval needs n > 0 labeled samples");
  const double z =
      normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(dims)));
  const double big_n = static_cast<double>(global.total_unlabeled);
  const double n = static_cast<double>(global.total_labeled);
  std::vector<double> widths(global.coords.size());
  for (std::size_t c = 0; c < widths.size(); ++c) {
    const auto& v = global.coords[c];
    widths[c] = z * std::sqrt(v.var_estimate / big_n + v.var_rectifier / n);
  }
  return widths;
}

GridSet minkowski_zero_set(const ParamGrid& grid, const IntervalAt& fluctuation,
                           const IntervalAt& rectifier) {
  GridSet set;
  set.grid = grid;
  set.retained.assign(grid.size(), 0);
  std::vector<double> theta(grid.dims());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, theta);
    const Interval sum = minkowski_sum(fluctuation(theta), rectifier(theta));
    set.retained[i] = sum.contains(0.0) ? 1 : 0;
  }
  return set;
}

}  // namespace fedppi
