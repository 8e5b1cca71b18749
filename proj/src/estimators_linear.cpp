#include <cmath>
#include <string>
#include <vector>

#include "fedppi/error.hpp"
#include "fedppi/estimators.hpp"
#include "fedppi/kernels.hpp"

namespace fedppi {
namespace {

constexpr double kMinReciprocalCondition = 1e-12;

struct BlockFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd meat;
};

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& sigma,
                                   const std::string& block) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinReciprocalCondition) {
    fail(ErrorCategory::kSingularDesign, "singular design: " + block);
  }
  return llt;
}

// Least squares of `target` on the columns of `x`, with the Gram matrix
// and the residual-weighted "meat" matrix, both averaged over rows.
BlockFit fit_block(const Eigen::MatrixXd& x, std::span<const double> target,
                   const std::string& block) {
  const auto m = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (m <= d) {
    fail(ErrorCategory::kSingularDesign,
         "singular design: " + block + " has " + std::to_string(m) +
             " rows for " + std::to_string(d) + " features");
  }
  const auto& k = kernels::active();
  const double inv_m = 1.0 / static_cast<double>(m);
  BlockFit fit;
  fit.sigma.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) {
    const double* ca = x.col(static_cast<Eigen::Index>(a)).data();
    rhs[a] = k.dot(ca, target.data(), m) * inv_m;
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = k.dot(ca, x.col(static_cast<Eigen::Index>(b)).data(), m) * inv_m;
      fit.sigma(a, b) = v;
      fit.sigma(b, a) = v;
    }
  }
  fit.coef = factor(fit.sigma, block).solve(rhs);

  Eigen::VectorXd resid_sq =
      Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(m)) -
      x * fit.coef;
  resid_sq = resid_sq.array().square();
  fit.meat.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double v =
          k.weighted_dot(x.col(static_cast<Eigen::Index>(a)).data(),
                         x.col(static_cast<Eigen::Index>(b)).data(),
                         resid_sq.data(), m) *
          inv_m;
      fit.meat(a, b) = v;
      fit.meat(b, a) = v;
    }
  }
  return fit;
}

Eigen::MatrixXd between_term(const Eigen::VectorXd& dev,
                             BetweenClientTerm between) {
  if (between == BetweenClientTerm::kOuterProduct) return dev * dev.transpose();
  return dev.array().square().matrix().asDiagonal();
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& sigma,
                         const Eigen::MatrixXd& meat,
                         const std::string& block) {
  const auto llt = factor(sigma, block);
  const Eigen::MatrixXd inv = llt.solve(
      Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  return inv * meat * inv;
}

}  // namespace

void LinearClientSummary::validate() const {
  const auto d = theta_f.size();
  const std::string who = "linear summary '" + client_id + "': ";
  require(d >= 1, who + "no coefficients");
  require(delta.size() == d, who + "delta size mismatch");
  for (const auto* m : {&sigma_unl, &meat_unl, &sigma_lab, &meat_lab}) {
    require(m->rows() == d && m->cols() == d, who + "matrix size mismatch");
  }
  require(n_labeled > 0 || n_unlabeled > 0, who + "no samples");
}

bool LinearClientSummary::operator==(const LinearClientSummary& o) const {
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return client_id == o.client_id && n_labeled == o.n_labeled &&
         n_unlabeled == o.n_unlabeled && same(theta_f, o.theta_f) &&
         same(delta, o.delta) && same(sigma_unl, o.sigma_unl) &&
         same(meat_unl, o.meat_unl) && same(sigma_lab, o.sigma_lab) &&
         same(meat_lab, o.meat_lab);
}

LinearClientSummary linear_client_summary(const ClientDataset& ds) {
  ds.validate();
  const std::vector<double> unl_target(
      ds.unlabeled_pred.data(), ds.unlabeled_pred.data() + ds.n_unlabeled());
  std::vector<double> lab_target(ds.n_labeled());
  kernels::active().subtract(ds.labeled_pred.data(), ds.labeled_y.data(),
                             lab_target.size(), lab_target.data());

  const BlockFit unl = fit_block(ds.unlabeled_x, unl_target,
                                 "unlabeled design of client '" +
                                     ds.client_id + "'");
  const BlockFit lab = fit_block(ds.labeled_x, lab_target,
                                 "labeled design of client '" + ds.client_id +
                                     "'");
  LinearClientSummary s;
  s.client_id = ds.client_id;
  s.n_labeled = ds.n_labeled();
  s.n_unlabeled = ds.n_unlabeled();
  s.theta_f = unl.coef;
  s.sigma_unl = unl.sigma;
  s.meat_unl = unl.meat;
  s.delta = lab.coef;
  s.sigma_lab = lab.sigma;
  s.meat_lab = lab.meat;
  return s;
}

AggregationWeights compute_weights(
    std::span<const LinearClientSummary> summaries) {
  std::vector<std::uint64_t> n;
  std::vector<std::uint64_t> big_n;
  for (const auto& s : summaries) {
    n.push_back(s.n_labeled);
    big_n.push_back(s.n_unlabeled);
  }
  return compute_weights(n, big_n);
}

LinearGlobalSummary aggregate_linear(
    std::span<const LinearClientSummary> summaries,
    const AggregationWeights& weights, BetweenClientTerm between) {
  require(!summaries.empty(), "aggregate_linear: no summaries");
  require(weights.size() == summaries.size(),
          "aggregate_linear: weight count does not match summary count");
  const auto d = static_cast<Eigen::Index>(summaries.front().dims());
  for (const auto& s : summaries) {
    s.validate();
    require(static_cast<Eigen::Index>(s.dims()) == d,
            "aggregate_linear: coefficient layout mismatch for '" +
                s.client_id + "'");
  }
  LinearGlobalSummary g;
  g.theta_f = Eigen::VectorXd::Zero(d);
  g.delta = Eigen::VectorXd::Zero(d);
  g.sigma_unl = Eigen::MatrixXd::Zero(d, d);
  g.sigma_lab = Eigen::MatrixXd::Zero(d, d);
  g.meat_unl = Eigen::MatrixXd::Zero(d, d);
  g.meat_lab = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    g.theta_f += weights[k] * s.theta_f;
    g.delta += weights[k] * s.delta;
    g.sigma_unl += weights[k] * s.sigma_unl;
    g.sigma_lab += weights[k] * s.sigma_lab;
    g.total_labeled += s.n_labeled;
    g.total_unlabeled += s.n_unlabeled;
  }
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    if (weights[k] == 0.0) continue;
    g.meat_unl +=
        weights[k] * (s.meat_unl + between_term(s.theta_f - g.theta_f, between));
    g.meat_lab +=
        weights[k] * (s.meat_lab + between_term(s.delta - g.delta, between));
  }
  return g;
}

LinearGlobalSummary as_linear_global(const LinearClientSummary& s) {
  s.validate();
  LinearGlobalSummary g;
  g.theta_f = s.theta_f;
  g.delta = s.delta;
  g.sigma_unl = s.sigma_unl;
  g.meat_unl = s.meat_unl;
  g.sigma_lab = s.sigma_lab;
  g.meat_lab = s.meat_lab;
  g.total_labeled = s.n_labeled;
  g.total_unlabeled = s.n_unlabeled;
  return g;
}

Interval linear_interval(const LinearGlobalSummary& g, std::size_t j_star,
                         double alpha) {
  const auto d = static_cast<std::size_t>(g.theta_f.size());
  require(j_star < d, "linear_interval: coefficient index " +
                          std::to_string(j_star) + " out of range for d = " +
                          std::to_string(d));
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(g.total_unlabeled > 0 && g.total_labeled > 0,
          "linear_interval: needs N > 0 and n > 0");
  const Eigen::MatrixXd v_unl =
      sandwich(g.sigma_unl, g.meat_unl, "aggregated unlabeled design");
  const Eigen::MatrixXd v_lab =
      sandwich(g.sigma_lab, g.meat_lab, "aggregated labeled design");
  const auto j = static_cast<Eigen::Index>(j_star);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double w =
      z * std::sqrt(v_unl(j, j) / static_cast<double>(g.total_unlabeled) +
                    v_lab(j, j) / static_cast<double>(g.total_labeled));
  const double center = g.theta_f[j] - g.delta[j];
  return Interval(center - w, center + w);
}

Interval linear_federated(std::span<const LinearClientSummary> summaries,
                          const AggregationWeights& weights,
                          std::size_t j_star, double alpha,
                          BetweenClientTerm between) {
  return linear_interval(aggregate_linear(summaries, weights, between), j_star,
                         alpha);
}

}  // namespace fedppi
