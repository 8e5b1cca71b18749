#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedppi/dataset.hpp"
#include "fedppi/federation.hpp"
#include "fedppi/grid.hpp"
#include "fedppi/stats.hpp"

namespace fedppi {

/// How the between-client deviation of coefficient vectors enters the
/// aggregated sandwich "meat" matrices.
enum class BetweenClientTerm {
  kDiagonal,      // diag((theta_k - theta)^2)
  kOuterProduct,  // (theta_k - theta)(theta_k - theta)^T
};

struct EstimatorOptions {
  double q = 0.5;
  std::size_t j_star = 1;
  std::size_t quantile_grid_points = 512;
  std::size_t logistic_grid_points = 41;
  double logistic_lo = -1.0;
  double logistic_hi = 3.0;
  std::size_t max_logistic_dims = 3;
  BetweenClientTerm between_term = BetweenClientTerm::kDiagonal;
};

// ---------------------------------------------------------------- mean

/// estimate = mean of unlabeled predictions, rectifier = mean of
/// (labeled_pred - labeled_y), with population variances.
ClientSummary mean_client_summary(const ClientDataset& ds);

/// theta_pp = estimate - rectifier, half-width from interval_half_widths.
Interval mean_interval(const GlobalSummary& global, double alpha);

Interval mean_federated(std::span<const ClientSummary> summaries,
                        const AggregationWeights& weights, double alpha);

// ------------------------------------------------------------ quantile

struct PredictionRange {
  double min = 0.0;
  double max = 0.0;
  std::uint64_t n_labeled = 0;
  std::uint64_t n_unlabeled = 0;

  friend bool operator==(const PredictionRange&,
                         const PredictionRange&) = default;
};

/// Range of the unlabeled predictions plus counts; the only data a client
/// reveals before the grid is agreed.
PredictionRange prediction_range(const ClientDataset& ds);

/// Uniform grid between the global min and max of client predictions.
ParamGrid negotiate_quantile_grid(std::span<const PredictionRange> ranges,
                                  std::size_t points);

/// Per grid point: imputed CDF 1{f <= theta} on unlabeled predictions and
/// rectifier 1{y <= theta} - 1{f <= theta} on labeled pairs.
ClientSummary quantile_client_summary(const ClientDataset& ds,
                                      const ParamGrid& grid);

/// Retains theta with |F(theta) + rectifier(theta) - q| <= w(theta).
GridSet quantile_set(const GlobalSummary& global, const ParamGrid& grid,
                     double q, double alpha);

GridSet quantile_federated(std::span<const ClientSummary> summaries,
                           const AggregationWeights& weights,
                           const ParamGrid& grid, double q, double alpha);

// ------------------------------------------------------------ logistic

double sigmoid(double z) noexcept;

/// Per grid point and coordinate j: imputed gradient x_j (mu_theta(x) - f)
/// on unlabeled rows; rectifier x_j (f - y) on labeled rows, which does not
/// depend on theta and is computed once.
ClientSummary logistic_client_summary(const ClientDataset& ds,
                                      const ParamGrid& grid,
                                      std::size_t max_dims = 3);

/// Squared-loss gradient form of linear regression on a grid: imputed
/// gradient x_j (x^T theta - f), rectifier x_j (f - y).
ClientSummary linear_gradient_client_summary(const ClientDataset& ds,
                                             const ParamGrid& grid);

/// Retains theta iff |g_j + rectifier_j| <= w_j for every coordinate, with
/// the Bonferroni quantile z_{1 - alpha / (2d)}.
GridSet gradient_set(const GlobalSummary& global, const ParamGrid& grid,
                     double alpha);

GridSet logistic_federated(std::span<const ClientSummary> summaries,
                           const AggregationWeights& weights,
                           const ParamGrid& grid, double alpha);

// -------------------------------------------------------------- linear

struct LinearClientSummary {
  std::string client_id;
  std::uint64_t n_labeled = 0;
  std::uint64_t n_unlabeled = 0;
  Eigen::VectorXd theta_f;     // OLS of unlabeled predictions on features
  Eigen::VectorXd delta;       // OLS of (pred - y) on labeled features
  Eigen::MatrixXd sigma_unl;   // mean x x^T, unlabeled
  Eigen::MatrixXd meat_unl;    // mean e^2 x x^T, unlabeled residuals
  Eigen::MatrixXd sigma_lab;
  Eigen::MatrixXd meat_lab;

  std::size_t dims() const noexcept {
    return static_cast<std::size_t>(theta_f.size());
  }
  void validate() const;

  bool operator==(const LinearClientSummary& other) const;
};

struct LinearGlobalSummary {
  Eigen::VectorXd theta_f;
  Eigen::VectorXd delta;
  Eigen::MatrixXd sigma_unl;
  Eigen::MatrixXd meat_unl;
  Eigen::MatrixXd sigma_lab;
  Eigen::MatrixXd meat_lab;
  std::uint64_t total_labeled = 0;
  std::uint64_t total_unlabeled = 0;
};

/// Throws a singular-design error naming the block when either design is
/// rank deficient.
LinearClientSummary linear_client_summary(const ClientDataset& ds);

LinearGlobalSummary aggregate_linear(
    std::span<const LinearClientSummary> summaries,
    const AggregationWeights& weights,
    BetweenClientTerm between = BetweenClientTerm::kDiagonal);

LinearGlobalSummary as_linear_global(const LinearClientSummary& summary);

/// Sandwich interval on coefficient j_star of theta_f - delta.
Interval linear_interval(const LinearGlobalSummary& global,
                         std::size_t j_star, double alpha);

Interval linear_federated(std::span<const LinearClientSummary> summaries,
                          const AggregationWeights& weights,
                          std::size_t j_star, double alpha,
                          BetweenClientTerm between =
                              BetweenClientTerm::kDiagonal);

AggregationWeights compute_weights(
    std::span<const LinearClientSummary> summaries);

// ------------------------------------------------ general risk minimizer

/// loss(theta, x, y)
using LossFn = std::function<double(std::span<const double> theta,
                                    std::span<const double> x, double y)>;

struct RiskMinResult {
  std::vector<double> theta_tilde_f;
  GridSet retained;
  std::vector<Interval> delta_bounds;  // [R^l(theta), R^u(theta)]
  std::vector<Interval> t_bounds;      // [T^l(theta), T^u(theta)]
  std::vector<double> imputed_risk;    // second-half imputed risk
  std::size_t dropped_unlabeled = 0;   // odd-count clients lose one point
};

/// Confidence set for a grid-restricted risk minimizer. The first half of
/// each client's unlabeled rows picks theta_tilde_f, the second half gives
/// the imputed risk, and CLT bounds at delta/2 and (alpha - delta)/2 cover
/// the rectifier and the imputed-risk fluctuation.
RiskMinResult risk_min_confidence(const LossFn& loss,
                                  std::span<const ClientDataset> datasets,
                                  const ParamGrid& grid, double alpha,
                                  double delta);

}  // namespace fedppi
