#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fedppi/error.hpp"
#include "fedppi/estimators.hpp"

namespace fedppi {
namespace {

struct ClientSplit {
  std::size_t half = 0;  // unlabeled rows per half
  std::size_t labeled = 0;
};

void row(const Eigen::MatrixXd& m, Eigen::Index i, std::vector<double>& out) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[j] = m(i, j);
}

}  // namespace

RiskMinResult risk_min_confidence(const LossFn& loss,
                                  std::span<const ClientDataset> datasets,
                                  const ParamGrid& grid, double alpha,
                                  double delta) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(delta > 0.0 && delta < alpha,
          "delta must lie in (0, alpha); got " + std::to_string(delta));
  require(!datasets.empty(), "risk_min_confidence: no clients");
  require(!grid.empty(), "risk_min_confidence: empty grid");

  RiskMinResult result;
  std::vector<ClientSplit> splits(datasets.size());
  std::vector<std::uint64_t> n_counts(datasets.size());
  std::vector<std::uint64_t> big_n_counts(datasets.size());
  std::size_t total_labeled = 0;
  std::size_t total_second_half = 0;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const auto& ds = datasets[k];
    ds.validate();
    require(grid.dims() == ds.dims(),
            "risk_min_confidence: grid dimension does not match features");
    const std::size_t usable = ds.n_unlabeled() - ds.n_unlabeled() % 2;
    result.dropped_unlabeled += ds.n_unlabeled() % 2;
    require(usable >= 2 && ds.n_labeled() >= 1,
            "risk_min_confidence: client '" + ds.client_id +
                "' needs >= 2 unlabeled and >= 1 labeled samples");
    splits[k] = {usable / 2, ds.n_labeled()};
    n_counts[k] = ds.n_labeled();
    big_n_counts[k] = usable;
    total_labeled += ds.n_labeled();
    total_second_half += usable / 2;
  }
  const AggregationWeights weights = compute_weights(n_counts, big_n_counts);

  const std::size_t points = grid.size();
  std::vector<double> first_half_risk(points);
  std::vector<MomentSummary> second(points);
  std::vector<MomentSummary> rect(points);

  std::vector<double> theta(grid.dims());
  std::vector<double> x(grid.dims());
  std::vector<WeightedMoments> second_parts(datasets.size());
  std::vector<WeightedMoments> rect_parts(datasets.size());
  std::vector<double> values;
  for (std::size_t p = 0; p < points; ++p) {
    grid.point(p, theta);
    double first = 0.0;
    for (std::size_t k = 0; k < datasets.size(); ++k) {
      const auto& ds = datasets[k];
      const auto half = static_cast<Eigen::Index>(splits[k].half);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < half; ++i) {
        row(ds.unlabeled_x, i, x);
        acc += loss(theta, x, ds.unlabeled_pred[i]);
      }
      first += weights[k] * acc / static_cast<double>(half);

      values.resize(static_cast<std::size_t>(half));
      for (Eigen::Index i = 0; i < half; ++i) {
        row(ds.unlabeled_x, half + i, x);
        values[i] = loss(theta, x, ds.unlabeled_pred[half + i]);
      }
      second_parts[k] = {weights[k], sample_moments(values)};

      values.resize(ds.n_labeled());
      for (Eigen::Index i = 0; i < ds.labeled_x.rows(); ++i) {
        row(ds.labeled_x, i, x);
        values[i] = loss(theta, x, ds.labeled_y[i]) -
                    loss(theta, x, ds.labeled_pred[i]);
      }
      rect_parts[k] = {weights[k], sample_moments(values)};
    }
    first_half_risk[p] = first;
    second[p] = merge_moments(second_parts);
    rect[p] = merge_moments(rect_parts);
  }

  std::size_t best = 0;
  for (std::size_t p = 1; p < points; ++p) {
    if (first_half_risk[p] < first_half_risk[best]) best = p;
  }
  result.theta_tilde_f = grid.point(best);

  const double z_rect = normal_quantile(1.0 - delta / 2.0);
  const double z_fluct = normal_quantile(1.0 - (alpha - delta) / 2.0);
  const double n = static_cast<double>(total_labeled);
  const double half_n = static_cast<double>(total_second_half);
  result.delta_bounds.resize(points);
  result.t_bounds.resize(points);
  result.imputed_risk.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    const double r = z_rect * std::sqrt(rect[p].variance / n);
    const double t = z_fluct * std::sqrt(second[p].variance / half_n);
    result.delta_bounds[p] = Interval(rect[p].mean - r, rect[p].mean + r);
    result.t_bounds[p] = Interval(-t, t);
    result.imputed_risk[p] = second[p].mean;
  }

  result.retained.grid = grid;
  result.retained.retained.resize(points);
  const double base = result.imputed_risk[best];
  const double rect_upper_best = result.delta_bounds[best].hi;
  const double t_lower_best = result.t_bounds[best].lo;
  for (std::size_t p = 0; p < points; ++p) {
    const double slack = (rect_upper_best - result.delta_bounds[p].lo) +
                         (result.t_bounds[p].hi - t_lower_best);
    result.retained.retained[p] =
        result.imputed_risk[p] <= base + slack ? 1 : 0;
  }
  return result;
}

}  // namespace fedppi
