#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedppi/grid.hpp"
#include "fedppi/stats.hpp"

namespace fedppi {

/// Convex per-client weights p_k.
class AggregationWeights {
 public:
  /// Validates nonnegativity and unit sum (within kWeightSumTolerance).
  static AggregationWeights from_values(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_.at(k); }

 private:
  explicit AggregationWeights(std::vector<double> values)
      : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// p_k = (n_k + N_k) / sum_j (n_j + N_j).
AggregationWeights compute_weights(std::span<const std::uint64_t> labeled,
                                   std::span<const std::uint64_t> unlabeled);

/// Statistics of one coordinate (or one grid point and coordinate): the
/// imputed statistic on unlabeled predictions and the labeled rectifier,
/// each with its population variance.
struct CoordStats {
  double estimate = 0.0;
  double rectifier = 0.0;
  double var_estimate = 0.0;
  double var_rectifier = 0.0;

  friend bool operator==(const CoordStats&, const CoordStats&) = default;
};

/// `points` grid points times `dims` coordinates; index = point * dims + j.
struct CoordLayout {
  std::uint32_t points = 1;
  std::uint32_t dims = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(points) * dims;
  }
  friend bool operator==(const CoordLayout&, const CoordLayout&) = default;
};

/// Everything a client ships to the aggregator.
struct ClientSummary {
  std::string client_id;
  std::uint64_t n_labeled = 0;
  std::uint64_t n_unlabeled = 0;
  CoordLayout layout;
  std::vector<CoordStats> coords;

  const CoordStats& at(std::size_t point, std::size_t j) const {
    return coords[point * layout.dims + j];
  }
  void validate() const;

  friend bool operator==(const ClientSummary&, const ClientSummary&) = default;
};

struct GlobalSummary {
  CoordLayout layout;
  std::vector<CoordStats> coords;
  std::uint64_t total_labeled = 0;    // n
  std::uint64_t total_unlabeled = 0;  // N

  const CoordStats& at(std::size_t point, std::size_t j) const {
    return coords[point * layout.dims + j];
  }

  friend bool operator==(const GlobalSummary&, const GlobalSummary&) = default;
};

AggregationWeights compute_weights(std::span<const ClientSummary> summaries);

/// Per coordinate: weighted means of estimate and rectifier and the
/// total-variance merge of their variances. Totals are summed.
GlobalSummary aggregate(std::span<const ClientSummary> summaries,
                        const AggregationWeights& weights);

/// A single summary viewed as a global one (no weighting involved).
GlobalSummary as_global(const ClientSummary& summary);

/// Per-coordinate half-widths
///   z_{1 - alpha / (2 dims)} * sqrt(var_estimate / N + var_rectifier / n).
std::vector<double> interval_half_widths(const GlobalSummary& global,
                                         double alpha, std::size_t dims);

using IntervalAt = std::function<Interval(std::span<const double> theta)>;

/// Retains theta iff 0 lies in fluctuation(theta) + rectifier(theta).
GridSet minkowski_zero_set(const ParamGrid& grid, const IntervalAt& fluctuation,
                     const IntervalAt& rectifier);

}  // namespace fedppi
