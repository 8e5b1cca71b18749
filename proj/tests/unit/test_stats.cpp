#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fedppi/error.hpp"
#include "fedppi/rng.hpp"
#include "fedppi/stats.hpp"

using namespace fedppi;

namespace {

// Bisection on Phi written with erfc, independent of the library code.
double bisect_quantile(double p) {
  // 1 - p is exact for p > 0.5, so bisect on the lower tail there.
  if (p > 0.5) return -bisect_quantile(1.0 - p);
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MomentSummary brute_moments(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  const double mean = static_cast<double>(s / v.size());
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, static_cast<double>(ss / v.size()), v.size()};
}

}  // namespace

TEST_CASE("normal_quantile matches reference values") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959964) < 1e-5);
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(std::abs(normal_quantile(0.8413447) - bisect_quantile(0.8413447)) < 1e-9);
  CHECK(std::abs(normal_quantile(0.8413447) - 1.0) < 1e-5);
}

TEST_CASE("normal_quantile inverts the CDF to 1e-9 across (0,1)") {
  std::vector<double> ps{1e-300, 1e-100, 1e-12, 1e-6, 0.001, 0.02425, 0.05,
                         0.1,    0.3,    0.49,  0.51, 0.7,   0.9,     0.97575,
                         0.999,  1 - 1e-9, 1 - 1e-15};
  for (int i = 1; i < 1000; ++i) ps.push_back(i / 1000.0);
  for (double p : ps) {
    CAPTURE(p);
    CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-9);
  }
}

TEST_CASE("normal_quantile is antisymmetric") {
  for (int i = 1; i < 500; ++i) {
    const double p = i / 1000.0;
    CHECK(std::abs(normal_quantile(p) + normal_quantile(1.0 - p)) < 1e-9);
  }
}

TEST_CASE("normal_quantile rejects probabilities outside (0,1)") {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    try {
      normal_quantile(p);
      FAIL("no error for p = " << p);
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::kDomain);
    }
  }
}

TEST_CASE("merge_moments examples") {
  const WeightedMoments single[] = {{1.0, {2.0, 3.0, 10}}};
  CHECK(merge_moments(single) == MomentSummary{2.0, 3.0, 10});

  const WeightedMoments two[] = {{0.5, {1.0, 0.0, 4}}, {0.5, {3.0, 0.0, 4}}};
  const auto m = merge_moments(two);
  CHECK(m.mean == 2.0);
  CHECK(m.variance == 1.0);
  CHECK(m.count == 8);
}

TEST_CASE("merge_moments of equal parts reproduces pooled moments") {
  Rng rng(7);
  std::vector<double> sample(20);
  for (double& x : sample) x = rng.normal(3.0, 2.0);
  std::vector<WeightedMoments> parts;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> part(sample.begin() + 5 * k, sample.begin() + 5 * k + 5);
    parts.push_back({0.25, sample_moments(part)});
  }
  const auto merged = merge_moments(parts);
  const auto pooled = brute_moments(sample);
  CHECK(std::abs(merged.mean - pooled.mean) < 1e-12);
  CHECK(std::abs(merged.variance - pooled.variance) < 1e-12);
  CHECK(merged.count == 20);
}

TEST_CASE("merge_moments with count weights matches pooled moments") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> sample(10 + rng.below(200));
    for (double& x : sample) x = rng.normal(-1.0, 5.0);
    std::vector<std::size_t> cuts{0, sample.size()};
    for (int c = 0; c < 4; ++c) cuts.push_back(1 + rng.below(sample.size() - 1));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<WeightedMoments> parts;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      std::vector<double> part(sample.begin() + cuts[i], sample.begin() + cuts[i + 1]);
      parts.push_back({static_cast<double>(part.size()) / sample.size(),
                       sample_moments(part)});
    }
    // Normalise the weights so they sum to one within the tolerance.
    double total = 0;
    for (auto& p : parts) total += p.weight;
    for (auto& p : parts) p.weight /= total;
    const auto merged = merge_moments(parts);
    const auto pooled = brute_moments(sample);
    CHECK(std::abs(merged.mean - pooled.mean) <= 1e-10 * std::max(1.0, std::abs(pooled.mean)));
    CHECK(std::abs(merged.variance - pooled.variance) <= 1e-10 * pooled.variance);
  }
}

TEST_CASE("merge_moments is permutation invariant and flattens nested merges") {
  Rng rng(3);
  std::vector<WeightedMoments> parts;
  for (int k = 0; k < 6; ++k) {
    parts.push_back({1.0 / 6.0, {rng.normal(), rng.uniform() * 3, 10}});
  }
  const auto base = merge_moments(parts);
  std::vector<WeightedMoments> reversed(parts.rbegin(), parts.rend());
  const auto r = merge_moments(reversed);
  CHECK(std::abs(r.mean - base.mean) < 1e-14);
  CHECK(std::abs(r.variance - base.variance) < 1e-13);

  // Merge two groups of three, then merge the groups with weight 1/2 each.
  const auto half = [&](int from) {
    std::vector<WeightedMoments> g;
    for (int k = from; k < from + 3; ++k) g.push_back({1.0 / 3.0, parts[k].moments});
    return merge_moments(g);
  };
  const WeightedMoments groups[] = {{0.5, half(0)}, {0.5, half(3)}};
  const auto nested = merge_moments(groups);
  CHECK(std::abs(nested.mean - base.mean) < 1e-13);
  CHECK(std::abs(nested.variance - base.variance) < 1e-12);
}

TEST_CASE("merged variance is at least the mean within-part variance") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WeightedMoments> parts;
    std::vector<double> w(1 + rng.below(6));
    for (double& x : w) x = rng.uniform() + 0.01;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double within = 0;
    for (double x : w) {
      const double var = rng.uniform() * 4;
      parts.push_back({x / total, {rng.normal(0, 3), var, 5}});
      within += x / total * var;
    }
    CHECK(merge_moments(parts).variance >= within - 1e-12);
  }
}

TEST_CASE("merge_moments validation") {
  const WeightedMoments bad_sum[] = {{0.5, {1, 1, 1}}, {0.4, {1, 1, 1}}};
  CHECK_THROWS_AS(merge_moments(bad_sum), Error);
  const WeightedMoments within_tol[] = {{0.5 + 5e-13, {1, 1, 1}}, {0.5, {1, 1, 1}}};
  CHECK_NOTHROW(merge_moments(within_tol));
  const WeightedMoments empty_weighted[] = {{0.5, {0, 0, 0}}, {0.5, {1, 1, 1}}};
  CHECK_THROWS_AS(merge_moments(empty_weighted), Error);
  const WeightedMoments empty_zero[] = {{0.0, {0, 0, 0}}, {1.0, {1, 2, 3}}};
  CHECK(merge_moments(empty_zero) == MomentSummary{1, 2, 3});
  CHECK_THROWS_AS(merge_moments(std::span<const WeightedMoments>{}), Error);
  const WeightedMoments negative[] = {{-0.5, {1, 1, 1}}, {1.5, {1, 1, 1}}};
  CHECK_THROWS_AS(merge_moments(negative), Error);
}

TEST_CASE("sample_moments uses the population convention") {
  const std::vector<double> v{1, 2, 3};
  const auto m = sample_moments(v);
  CHECK(m.mean == 2.0);
  CHECK(m.variance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.count == 3);
  CHECK(sample_moments(std::vector<double>{}) == MomentSummary{});
}

TEST_CASE("minkowski_sum") {
  CHECK(minkowski_sum({0, 0}, {-1, 2}) == Interval(-1, 2));
  CHECK(minkowski_sum({1, 2}, {3, 5}) == Interval(4, 7));
  CHECK(minkowski_sum({-0.5, 0.5}, {-2, 2}) == Interval(-2.5, 2.5));
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    const Interval x(a, a + rng.uniform());
    const Interval y(b, b + rng.uniform());
    CHECK(std::abs(minkowski_sum(x, y).width() - (x.width() + y.width())) < 1e-14);
  }
}

TEST_CASE("Interval rejects inverted or NaN endpoints") {
  CHECK_THROWS_AS(Interval(1.0, 0.0), Error);
  CHECK_THROWS_AS(Interval(std::nan(""), 0.0), Error);
  const Interval i(1.0, 3.0);
  CHECK(i.contains(1.0));
  CHECK(i.contains(3.0));
  CHECK_FALSE(i.contains(3.0000001));
  CHECK(i.width() == 2.0);
  CHECK(i.center() == 2.0);
}
