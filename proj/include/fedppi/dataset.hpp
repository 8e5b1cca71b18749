#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedppi {

/// One client's data: a small labeled block and a large block carrying
/// only predictions. Feature matrices are column-major so each feature is a
/// contiguous column for the kernels.
struct ClientDataset {
  std::string client_id;
  Eigen::MatrixXd labeled_x;
  Eigen::VectorXd labeled_y;
  Eigen::VectorXd labeled_pred;
  Eigen::MatrixXd unlabeled_x;
  Eigen::VectorXd unlabeled_pred;
  // Source population rows, when the dataset came from a partition.
  std::vector<std::size_t> labeled_rows;
  std::vector<std::size_t> unlabeled_rows;

  std::size_t n_labeled() const noexcept {
    return static_cast<std::size_t>(labeled_y.size());
  }
  std::size_t n_unlabeled() const noexcept {
    return static_cast<std::size_t>(unlabeled_pred.size());
  }
  std::size_t dims() const noexcept;

  /// Checks row counts agree across blocks and d >= 1.
  void validate() const;
};

/// Stacks the labeled blocks and the unlabeled blocks of several clients.
ClientDataset concatenate(std::span<const ClientDataset> parts,
                          std::string client_id);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<const double> column(const Eigen::MatrixXd& m,
                                      std::size_t j) {
  return {m.col(static_cast<Eigen::Index>(j)).data(),
          static_cast<std::size_t>(m.rows())};
}

}  // namespace fedppi
