#include "fedppi/dataset.hpp"

#include <algorithm>
#include <string>

#include "fedppi/error.hpp"

namespace fedppi {

std::size_t ClientDataset::dims() const noexcept {
  return static_cast<std::size_t>(
      std::max(labeled_x.cols(), unlabeled_x.cols()));
}

void ClientDataset::validate() const {
  const std::string who = "client '" + client_id + "': ";
  require(labeled_x.rows() == labeled_y.size() &&
              labeled_x.rows() == labeled_pred.size(),
          who + "labeled block row counts disagree");
  require(unlabeled_x.rows() == unlabeled_pred.size(),
          who + "unlabeled block row counts disagree");
  require(dims() >= 1, who + "needs at least one feature");
  if (labeled_x.rows() > 0 && unlabeled_x.rows() > 0) {
    require(labeled_x.cols() == unlabeled_x.cols(),
            who + "labeled and unlabeled feature counts disagree");
  }
}

ClientDataset concatenate(std::span<const ClientDataset> parts,
                          std::string client_id) {
  require(!parts.empty(), "concatenate: no datasets");
  Eigen::Index n = 0;
  Eigen::Index big_n = 0;
  const auto d = static_cast<Eigen::Index>(parts.front().dims());
  for (const auto& p : parts) {
    p.validate();
    require(static_cast<Eigen::Index>(p.dims()) == d,
            "concatenate: feature counts disagree");
    n += p.labeled_x.rows();
    big_n += p.unlabeled_x.rows();
  }
  ClientDataset out;
  out.client_id = std::move(client_id);
  out.labeled_x.resize(n, d);
  out.labeled_y.resize(n);
  out.labeled_pred.resize(n);
  out.unlabeled_x.resize(big_n, d);
  out.unlabeled_pred.resize(big_n);
  Eigen::Index li = 0;
  Eigen::Index ui = 0;
  for (const auto& p : parts) {
    const auto pn = p.labeled_x.rows();
    const auto pu = p.unlabeled_x.rows();
    if (pn > 0) {
      out.labeled_x.middleRows(li, pn) = p.labeled_x;
      out.labeled_y.segment(li, pn) = p.labeled_y;
      out.labeled_pred.segment(li, pn) = p.labeled_pred;
    }
    if (pu > 0) {
      out.unlabeled_x.middleRows(ui, pu) = p.unlabeled_x;
      out.unlabeled_pred.segment(ui, pu) = p.unlabeled_pred;
    }
    out.labeled_rows.insert(out.labeled_rows.end(), p.labeled_rows.begin(),
                            p.labeled_rows.end());
    out.unlabeled_rows.insert(out.unlabeled_rows.end(),
                              p.unlabeled_rows.begin(),
                              p.unlabeled_rows.end());
    li += pn;
    ui += pu;
  }
  return out;
}

}  // namespace fedppi
