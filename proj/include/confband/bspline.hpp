#pragma once

// Clamped B-spline basis on an interval.

#include <cstddef>
#include <string>
#include <vector>

#include "confband/error.hpp"

namespace confband {

class BSplineBasis {
 public:
  /// `order` = degree + 1; interior knots strictly increasing inside (lo, hi).
  BSplineBasis(int order, std::vector<double> interior_knots, double lo = 0.0, double hi = 1.0)
      : order_(order), lo_(lo), hi_(hi) {
    if (order < 1) throw Error(ErrorCode::invalid_argument, "B-spline order must be >= 1");
    if (!(lo < hi)) throw Error(ErrorCode::degenerate_domain, "B-spline domain must satisfy lo < hi");
    double prev = lo;
    for (double k : interior_knots) {
      if (!(k > prev && k < hi)) {
        throw Error(ErrorCode::invalid_argument, "interior knots must be strictly increasing inside the domain");
      }
      prev = k;
    }
    knots_.assign(static_cast<std::size_t>(order), lo);
    knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
    knots_.insert(knots_.end(), static_cast<std::size_t>(order), hi);
  }

  std::size_t size() const noexcept { return knots_.size() - static_cast<std::size_t>(order_); }
  int order() const noexcept { return order_; }

  /// All basis values at t (Cox-de Boor recursion, triangular form).
  std::vector<double> operator()(double t) const {
    if (!(t >= lo_ && t <= hi_)) {
      throw Error(ErrorCode::out_of_domain, "B-spline evaluated outside its domain at t=" + std::to_string(t));
    }
    const std::size_t n = size();
    const std::size_t degree = static_cast<std::size_t>(order_ - 1);
    // Knot span s with knots_[s] <= t < knots_[s+1]; the right end uses the last span.
    std::size_t s = degree;
    if (t >= hi_) {
      s = n - 1;
    } else {
      while (s + 1 < knots_.size() && knots_[s + 1] <= t) ++s;
    }
    std::vector<double> local(degree + 1, 0.0), left(degree + 1), right(degree + 1);
    local[0] = 1.0;
    for (std::size_t j = 1; j <= degree; ++j) {
      left[j] = t - knots_[s + 1 - j];
      right[j] = knots_[s + j] - t;
      double saved = 0.0;
      for (std::size_t r = 0; r < j; ++r) {
        const double tmp = local[r] / (right[r + 1] + left[j - r]);
        local[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      local[j] = saved;
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r <= degree; ++r) out[s - degree + r] = local[r];
    return out;
  }

 private:
  int order_;
  double lo_;
  double hi_;
  std::vector<double> knots_;
};

inline std::vector<double> bspline_basis(int order, const std::vector<double>& interior_knots, double t) {
  return BSplineBasis(order, interior_knots)(t);
}

}  // namespace confband
