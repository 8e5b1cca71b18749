#include "fedppi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedppi/error.hpp"

namespace fedppi {

ParamGrid::ParamGrid(std::vector<std::vector<double>> axes)
    : axes_(std::move(axes)) {
  require(!axes_.empty(), "grid needs at least one axis");
  size_ = 1;
  for (std::size_t j = 0; j < axes_.size(); ++j) {
    const auto& axis = axes_[j];
    require(!axis.empty(), "grid axis " + std::to_string(j) + " is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      require(std::isfinite(axis[i]), "grid values must be finite");
      if (i > 0) {
        require(axis[i] > axis[i - 1], "grid axis " + std::to_string(j) +
                                           " is not strictly increasing");
      }
    }
    size_ *= axis.size();
  }
}

ParamGrid ParamGrid::uniform(double lo, double hi, std::size_t points) {
  require(points >= 1, "grid needs at least one point");
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          "grid bounds must be finite with lo <= hi");
  if (lo == hi || points == 1) return ParamGrid(std::vector<std::vector<double>>{{lo}});
  std::vector<double> axis(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    axis[i] = lo + step * static_cast<double>(i);
  }
  axis.back() = hi;
  return ParamGrid(std::vector<std::vector<double>>{std::move(axis)});
}

ParamGrid ParamGrid::cube(std::size_t dims, double lo, double hi,
                          std::size_t points) {
  require(dims >= 1, "grid needs at least one axis");
  const ParamGrid line = uniform(lo, hi, points);
  return ParamGrid(std::vector<std::vector<double>>(dims, line.axis(0)));
}

void ParamGrid::point(std::size_t index, std::span<double> out) const {
  for (std::size_t j = axes_.size(); j-- > 0;) {
    const auto& axis = axes_[j];
    out[j] = axis[index % axis.size()];
    index /= axis.size();
  }
}

std::vector<double> ParamGrid::point(std::size_t index) const {
  std::vector<double> out(dims());
  point(index, out);
  return out;
}

double ParamGrid::step(std::size_t j) const {
  const auto& axis = axes_.at(j);
  double step = 0.0;
  for (std::size_t i = 1; i < axis.size(); ++i) {
    step = std::max(step, axis[i] - axis[i - 1]);
  }
  return step;
}

std::size_t GridSet::count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(retained.begin(), retained.end(),
                    [](std::uint8_t r) { return r != 0; }));
}

bool GridSet::hull(std::size_t axis, Interval& out) const {
  bool any = false;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> p(grid.dims());
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (!retained[i]) continue;
    grid.point(i, p);
    if (!any) {
      lo = hi = p[axis];
      any = true;
    } else {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
  }
  if (any) out = Interval(lo, hi);
  return any;
}

bool GridSet::covers(std::span<const double> theta) const {
  require(theta.size() == grid.dims(), "theta dimension does not match grid");
  std::vector<double> steps(grid.dims());
  for (std::size_t j = 0; j < grid.dims(); ++j) steps[j] = grid.step(j);
  std::vector<double> p(grid.dims());
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (!retained[i]) continue;
    grid.point(i, p);
    bool close = true;
    for (std::size_t j = 0; j < p.size() && close; ++j) {
      close = std::abs(p[j] - theta[j]) <= steps[j];
    }
    if (close) return true;
  }
  return false;
}

}  // namespace fedppi
