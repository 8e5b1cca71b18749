#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fedppi {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  /// Throws a validation error when lo > hi or either endpoint is NaN.
  Interval(double lo, double hi);

  double width() const noexcept { return hi - lo; }
  double center() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Mean and population variance (divide by count) of a sample.
struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  std::uint64_t count = 0;

  friend bool operator==(const MomentSummary&, const MomentSummary&) = default;
};

struct WeightedMoments {
  double weight = 0.0;
  MomentSummary moments;
};

/// Standard normal CDF.
double normal_cdf(double z) noexcept;

/// Inverse of the standard normal CDF. Rational approximation followed by a
/// Halley correction; absolute error is below 1e-9 on (0, 1).
/// Throws a domain error for p outside the open unit interval.
double normal_quantile(double p);

/// Combines per-part moments by the law of total variance:
///   mean = sum w_k mean_k
///   var  = sum w_k (var_k + (mean_k - mean)^2)
/// Weights must be nonnegative and sum to one within 1e-12. A part with
/// count 0 must carry weight 0.
MomentSummary merge_moments(std::span<const WeightedMoments> parts);

/// Moments of a sample, population convention.
MomentSummary sample_moments(std::span<const double> values);

Interval minkowski_sum(const Interval& a, const Interval& b) noexcept;

/// Absolute tolerance used for every "weights sum to one" check.
inline constexpr double kWeightSumTolerance = 1e-12;

}  // namespace fedppi
