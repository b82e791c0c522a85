#pragma once

// Grid-sampled functions on a closed interval and the elementary operations
// (sup distance, quadrature, pointwise moments) the band machinery uses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confband/error.hpp"

namespace confband {

/// Uniform discretization of [a, b] with p points, endpoints included.
class Grid {
 public:
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  std::size_t size() const noexcept { return points_.size(); }
  double length() const noexcept { return b_ - a_; }
  double spacing() const noexcept { return (b_ - a_) / static_cast<double>(points_.size() - 1); }
  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }

  friend std::shared_ptr<const Grid> make_uniform_grid(double a, double b, std::size_t p);

 private:
  Grid(double a, double b, std::vector<double> points)
      : a_(a), b_(b), points_(std::move(points)) {}

  double a_;
  double b_;
  std::vector<double> points_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_uniform_grid(double a, double b, std::size_t p) {
  if (!(std::isfinite(a) && std::isfinite(b)) || !(a < b)) {
    throw Error(ErrorCode::degenerate_domain,
                "grid domain must satisfy a < b (got a=" + std::to_string(a) +
                    ", b=" + std::to_string(b) + ")");
  }
  if (p < 2) {
    throw Error(ErrorCode::grid_size, "grid needs at least 2 points");
  }
  std::vector<double> points(p);
  const double h = (b - a) / static_cast<double>(p - 1);
  for (std::size_t i = 0; i < p; ++i) points[i] = a + h * static_cast<double>(i);
  points.back() = b;
  return std::shared_ptr<const Grid>(new Grid(a, b, std::move(points)));
}

/// Two grids are interchangeable when they discretize the same interval
/// with the same number of points.
inline bool same_grid(const Grid& x, const Grid& y) noexcept {
  return &x == &y || (x.a() == y.a() && x.b() == y.b() && x.size() == y.size());
}

/// One function's values on a Grid.
class Curve {
 public:
  Curve(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error(ErrorCode::invalid_argument, "curve needs a grid");
    if (values_.size() != grid_->size()) {
      throw Error(ErrorCode::grid_mismatch, "curve has " + std::to_string(values_.size()) +
                                                " values but the grid has " +
                                                std::to_string(grid_->size()) + " points");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "curve values must be finite");
    }
  }

  static Curve constant(GridPtr grid, double c) {
    const std::size_t p = grid->size();
    return Curve(std::move(grid), std::vector<double>(p, c));
  }

  template <class F>
  static Curve from_function(GridPtr grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
    return Curve(std::move(grid), std::move(v));
  }

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Curve& x, const Curve& y) {
    return same_grid(*x.grid_, *y.grid_) && x.values_ == y.values_;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const Grid& x, const Grid& y) {
  if (!same_grid(x, y)) throw Error(ErrorCode::grid_mismatch, "curves live on different grids");
}

/// Pointwise combination of two curves on a shared grid.
template <class Op>
Curve zip_with(const Curve& x, const Curve& y, Op op) {
  require_same_grid(x.grid(), y.grid());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(x[i], y[i]);
  return Curve(x.grid_ptr(), std::move(out));
}

template <class Op>
Curve map_values(const Curve& x, Op op) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(x[i]);
  return Curve(x.grid_ptr(), std::move(out));
}

inline Curve scaled(const Curve& x, double lambda) {
  return map_values(x, [lambda](double v) { return lambda * v; });
}

/// Ordered collection of curves that share one grid.
class FunctionalSample {
 public:
  explicit FunctionalSample(GridPtr grid) : grid_(std::move(grid)) {}

  FunctionalSample(GridPtr grid, std::vector<Curve> curves) : grid_(std::move(grid)) {
    curves_.reserve(curves.size());
    for (auto& c : curves) push_back(std::move(c));
  }

  void push_back(Curve c) {
    require_same_grid(*grid_, c.grid());
    curves_.push_back(std::move(c));
  }

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return curves_.size(); }
  bool empty() const noexcept { return curves_.empty(); }
  const Curve& operator[](std::size_t i) const { return curves_[i]; }
  auto begin() const noexcept { return curves_.begin(); }
  auto end() const noexcept { return curves_.end(); }

  /// Sub-sample made of the curves at `indices`, in that order.
  FunctionalSample subset(std::span<const std::size_t> indices) const {
    FunctionalSample out(grid_);
    out.curves_.reserve(indices.size());
    for (std::size_t i : indices) out.curves_.push_back(curves_.at(i));
    return out;
  }

 private:
  GridPtr grid_;
  std::vector<Curve> curves_;
};

/// max over grid points of |x(t) - y(t)|.
inline double sup_abs_diff(const Curve& x, const Curve& y) {
  require_same_grid(x.grid(), y.grid());
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

/// Composite trapezoid rule on the curve's grid.
inline double integrate(const Curve& x) {
  const auto v = x.values();
  double inner = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) inner += v[i];
  return x.grid().spacing() * (0.5 * (v.front() + v.back()) + inner);
}

inline Curve mean_curve(const FunctionalSample& s) {
  if (s.empty()) throw Error(ErrorCode::empty_sample, "mean of an empty sample");
  std::vector<double> acc(s.grid().size(), 0.0);
  for (const Curve& c : s) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c[i];
  }
  const double n = static_cast<double>(s.size());
  for (double& v : acc) v /= n;
  return Curve(s.grid_ptr(), std::move(acc));
}

/// Pointwise sample standard deviation with divisor n - 1.
inline Curve std_curve(const FunctionalSample& s) {
  if (s.size() < 2) {
    throw Error(ErrorCode::sample_too_small, "standard deviation needs at least 2 curves");
  }
  const Curve mu = mean_curve(s);
  std::vector<double> acc(s.grid().size(), 0.0);
  for (const Curve& c : s) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const double d = c[i] - mu[i];
      acc[i] += d * d;
    }
  }
  const double denom = static_cast<double>(s.size() - 1);
  for (double& v : acc) v = std::sqrt(v / denom);
  return Curve(s.grid_ptr(), std::move(acc));
}

}  // namespace confband
