#include "fedppi/stats.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fedppi/error.hpp"
#include "fedppi/kernels.hpp"

namespace fedppi {

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    fail(ErrorCategory::kValidation, "invalid interval [" + std::to_string(lo) +
                                         ", " + std::to_string(hi) + "]");
  }
}

double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// Acklam's rational approximation, relative error ~1.15e-9 before
// refinement.
double acklam(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorCategory::kDomain,
         "normal_quantile: probability must lie in (0, 1), got " +
             std::to_string(p));
  }
  double x = acklam(p);
  // One Halley step on Phi(x) - p. The upper tail is refined through the
  // complementary probability to avoid cancellation near 1.
  const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
  double e;
  if (p > 0.5) {
    e = -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p));
  } else {
    e = normal_cdf(x) - p;
  }
  const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

MomentSummary merge_moments(std::span<const WeightedMoments> parts) {
  require(!parts.empty(), "merge_moments: no parts");
  double weight_sum = 0.0;
  for (const auto& part : parts) {
    require(std::isfinite(part.weight) && part.weight >= 0.0,
            "merge_moments: weights must be finite and nonnegative");
    require(part.moments.variance >= 0.0,
            "merge_moments: negative variance");
    if (part.moments.count == 0 && part.weight > 0.0) {
      fail(ErrorCategory::kValidation,
           "merge_moments: empty part carries nonzero weight");
    }
    weight_sum += part.weight;
  }
  if (std::abs(weight_sum - 1.0) > kWeightSumTolerance) {
    fail(ErrorCategory::kValidation,
         "merge_moments: weights sum to " + std::to_string(weight_sum) +
             ", expected 1");
  }

  MomentSummary merged;
  for (const auto& part : parts) {
    if (part.weight > 0.0) merged.mean += part.weight * part.moments.mean;
    merged.count += part.moments.count;
  }
  for (const auto& part : parts) {
    if (part.weight == 0.0) continue;
    const double dev = part.moments.mean - merged.mean;
    merged.variance += part.weight * (part.moments.variance + dev * dev);
  }
  return merged;
}

MomentSummary sample_moments(std::span<const double> values) {
  return kernels::moments(values);
}

Interval minkowski_sum(const Interval& a, const Interval& b) noexcept {
  Interval out;
  out.lo = a.lo + b.lo;
  out.hi = a.hi + b.hi;
  return out;
}

}  // namespace fedppi
