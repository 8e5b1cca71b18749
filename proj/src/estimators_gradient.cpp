#include <cmath>
#include <string>
#include <vector>

#include "fedppi/error.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/kernels.hpp"

namespace fedppi {
namespace {

std::vector<const double*> column_pointers(const Eigen::MatrixXd& m) {
  std::vector<const double*> cols(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) cols[j] = m.col(j).data();
  return cols;
}

ClientSummary prepare(const ClientDataset& ds, const ParamGrid& grid,
                      const char* what) {
  ds.validate();
  require(ds.n_labeled() >= 1 && ds.n_unlabeled() >= 1,
          std::string(what) + ": client '" + ds.client_id +
              "' needs labeled and unlabeled samples");
  require(!grid.empty() && grid.dims() == ds.dims(),
          std::string(what) + ": grid dimension does not match features");
  ClientSummary s;
  s.client_id = ds.client_id;
  s.n_labeled = ds.n_labeled();
  s.n_unlabeled = ds.n_unlabeled();
  s.layout = {static_cast<std::uint32_t>(grid.size()),
              static_cast<std::uint32_t>(ds.dims())};
  s.coords.resize(s.layout.size());
  return s;
}

// x_j (f - y) on the labeled block, one moment pair per coordinate.
std::vector<MomentSummary> rectifier_moments(const ClientDataset& ds) {
  const auto& k = kernels::active();
  const std::size_t n = ds.n_labeled();
  std::vector<double> residual(n);
  std::vector<double> product(n);
  k.subtract(ds.labeled_pred.data(), ds.labeled_y.data(), n, residual.data());
  std::vector<MomentSummary> out(ds.dims());
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    k.multiply(column(ds.labeled_x, j).data(), residual.data(), n,
               product.data());
    out[j] = kernels::moments(product);
  }
  return out;
}

void fill_point(ClientSummary& s, std::size_t point, const ClientDataset& ds,
                const std::vector<double>& residual,
                const std::vector<MomentSummary>& rect,
                std::vector<double>& product) {
  const auto& k = kernels::active();
  const std::size_t d = ds.dims();
  for (std::size_t j = 0; j < d; ++j) {
    k.multiply(column(ds.unlabeled_x, j).data(), residual.data(),
               residual.size(), product.data());
    const MomentSummary fit = kernels::moments(product);
    s.coords[point * d + j] = {fit.mean, rect[j].mean, fit.variance,
                               rect[j].variance};
  }
}

}  // namespace

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

ClientSummary logistic_client_summary(const ClientDataset& ds,
                                      const ParamGrid& grid,
                                      std::size_t max_dims) {
  if (ds.dims() > max_dims) {
    fail(ErrorCategory::kUnsupportedDimension,
         "logistic grid search supports at most " + std::to_string(max_dims) +
             " features, got " + std::to_string(ds.dims()));
  }
  ClientSummary s = prepare(ds, grid, "logistic_client_summary");
  for (Eigen::Index i = 0; i < ds.labeled_y.size(); ++i) {
    const double y = ds.labeled_y[i];
    require(y == 0.0 || y == 1.0, "logistic outcomes must be 0 or 1");
  }
  const auto in_unit = [](const Eigen::VectorXd& v) {
    return v.size() == 0 || (v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0);
  };
  require(in_unit(ds.labeled_pred) && in_unit(ds.unlabeled_pred),
          "logistic predictions must lie in [0, 1]");

  const std::vector<MomentSummary> rect = rectifier_moments(ds);
  const auto cols = column_pointers(ds.unlabeled_x);
  const std::size_t big_n = ds.n_unlabeled();
  std::vector<double> residual(big_n);
  std::vector<double> product(big_n);
  std::vector<double> theta(ds.dims());
  const auto& k = kernels::active();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, theta);
    k.logistic_residual(cols.data(), cols.size(), theta.data(),
                        ds.unlabeled_pred.data(), big_n, residual.data());
    fill_point(s, p, ds, residual, rect, product);
  }
  return s;
}

ClientSummary linear_gradient_client_summary(const ClientDataset& ds,
                                             const ParamGrid& grid) {
  ClientSummary s = prepare(ds, grid, "linear_gradient_client_summary");
  const std::vector<MomentSummary> rect = rectifier_moments(ds);
  const std::size_t big_n = ds.n_unlabeled();
  std::vector<double> residual(big_n);
  std::vector<double> product(big_n);
  Eigen::VectorXd theta(static_cast<Eigen::Index>(ds.dims()));
  std::vector<double> point(ds.dims());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, point);
    for (std::size_t j = 0; j < point.size(); ++j) theta[j] = point[j];
    Eigen::Map<Eigen::VectorXd>(residual.data(), big_n) =
        ds.unlabeled_x * theta - ds.unlabeled_pred;
    fill_point(s, p, ds, residual, rect, product);
  }
  return s;
}

GridSet gradient_set(const GlobalSummary& global, const ParamGrid& grid,
                     double alpha) {
  const std::size_t d = global.layout.dims;
  require(grid.dims() == d && global.layout.points == grid.size(),
          "gradient_set: summary layout does not match the grid");
  const std::vector<double> w = interval_half_widths(global, alpha, d);
  GridSet set;
  set.grid = grid;
  set.retained.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    bool keep = true;
    for (std::size_t j = 0; j < d && keep; ++j) {
      const auto& c = global.coords[p * d + j];
      keep = std::abs(c.estimate + c.rectifier) <= w[p * d + j];
    }
    set.retained[p] = keep ? 1 : 0;
  }
  return set;
}

GridSet logistic_federated(std::span<const ClientSummary> summaries,
                           const AggregationWeights& weights,
                           const ParamGrid& grid, double alpha) {
  return gradient_set(aggregate(summaries, weights), grid, alpha);
}

}  // namespace fedppi
