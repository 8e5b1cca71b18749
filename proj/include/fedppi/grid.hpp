#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fedppi/stats.hpp"

namespace fedppi {

/// Cartesian lattice of candidate parameters. Each axis is strictly
/// increasing; points are enumerated row-major (last axis fastest).
class ParamGrid {
 public:
  ParamGrid() = default;
  explicit ParamGrid(std::vector<std::vector<double>> axes);

  /// `points` evenly spaced values on [lo, hi]. lo == hi yields one point.
  static ParamGrid uniform(double lo, double hi, std::size_t points);
  /// The same uniform axis repeated `dims` times.
  static ParamGrid cube(std::size_t dims, double lo, double hi,
                        std::size_t points);

  std::size_t dims() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const std::vector<double>& axis(std::size_t j) const { return axes_.at(j); }
  const std::vector<std::vector<double>>& axes() const noexcept {
    return axes_;
  }

  void point(std::size_t index, std::span<double> out) const;
  std::vector<double> point(std::size_t index) const;
  /// Largest spacing between neighbours on axis j (0 for a single point).
  double step(std::size_t j) const;

  friend bool operator==(const ParamGrid&, const ParamGrid&) = default;

 private:
  std::vector<std::vector<double>> axes_;
  std::size_t size_ = 0;
};

/// Subset of a grid retained by a confidence procedure.
struct GridSet {
  ParamGrid grid;
  std::vector<std::uint8_t> retained;

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  /// Smallest interval along `axis` holding every retained point. Returns
  /// false when nothing is retained.
  bool hull(std::size_t axis, Interval& out) const;
  /// True if some retained point lies within one grid step of `theta` on
  /// every axis.
  bool covers(std::span<const double> theta) const;

  friend bool operator==(const GridSet&, const GridSet&) = default;
};

using ConfidenceSet = std::variant<Interval, GridSet>;

}  // namespace fedppi
