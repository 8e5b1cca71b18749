#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fedppi/dataset.hpp"
#include "fedppi/rng.hpp"

namespace testutil {

inline Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd col(const std::vector<double>& v) {
  return vec(v);
}

// One-feature dataset from plain vectors.
inline fedppi::ClientDataset make_1d(std::string id,
                                     const std::vector<double>& lx,
                                     const std::vector<double>& ly,
                                     const std::vector<double>& lf,
                                     const std::vector<double>& ux,
                                     const std::vector<double>& uf) {
  fedppi::ClientDataset ds;
  ds.client_id = std::move(id);
  ds.labeled_x = col(lx);
  ds.labeled_y = vec(ly);
  ds.labeled_pred = vec(lf);
  ds.unlabeled_x = col(ux);
  ds.unlabeled_pred = vec(uf);
  return ds;
}

// Random regression-style client: x ~ N(0,1) per feature, y = 1 + x0 + e,
// f = y + bias + noise. With `binary`, y is Bernoulli and f a probability.
inline fedppi::ClientDataset random_client(fedppi::Rng& rng, std::string id,
                                           std::size_t n, std::size_t big_n,
                                           std::size_t dims, bool binary = false,
                                           double bias = 0.2,
                                           bool intercept = false) {
  fedppi::ClientDataset ds;
  ds.client_id = std::move(id);
  const auto fill = [&](std::size_t rows, Eigen::MatrixXd& x,
                        Eigen::VectorXd* y, Eigen::VectorXd& f) {
    x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
    f.resize(static_cast<Eigen::Index>(rows));
    if (y) y->resize(static_cast<Eigen::Index>(rows));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x(i, j) = intercept && j == 0 ? 1.0 : rng.normal();
      }
      const double signal = x(i, intercept ? 1 : 0);
      double yi;
      double fi;
      if (binary) {
        const double p = 1.0 / (1.0 + std::exp(-signal));
        yi = rng.bernoulli(p) ? 1.0 : 0.0;
        fi = std::clamp(p + 0.1 * rng.normal(), 0.0, 1.0);
      } else {
        yi = 1.0 + signal + rng.normal();
        fi = yi + bias + 0.3 * rng.normal();
      }
      if (y) (*y)[i] = yi;
      f[i] = fi;
    }
  };
  fill(n, ds.labeled_x, &ds.labeled_y, ds.labeled_pred);
  fill(big_n, ds.unlabeled_x, nullptr, ds.unlabeled_pred);
  return ds;
}

// A client whose unlabeled block repeats its labeled rows: every statistic is
// then a full-population average over the same m_k points.
inline fedppi::ClientDataset full_population(fedppi::ClientDataset ds) {
  ds.unlabeled_x = ds.labeled_x;
  ds.unlabeled_pred = ds.labeled_pred;
  return ds;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace testutil
