#pragma once

// Order-statistic helpers shared by the conformal and modulation code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "confband/error.hpp"

namespace confband {

namespace detail {
// Products such as (l+1)(1-alpha) land a few ulps off an integer; snap those.
inline constexpr double rank_tolerance = 1e-12;

inline double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= rank_tolerance * std::max(1.0, std::abs(x)) ? r : x;
}
}  // namespace detail

/// Ceiling that treats values within 1e-12 (relative) of an integer as that integer.
inline long long ceil_rank(double x) { return static_cast<long long>(std::ceil(detail::snap(x))); }

/// Floor that treats values within 1e-12 (relative) of an integer as that integer.
inline long long floor_rank(double x) { return static_cast<long long>(std::floor(detail::snap(x))); }

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::alpha_out_of_range, "alpha must lie in (0, 1)");
  }
}

/// Rank ceil((l+1)(1-alpha)) of the calibration score that sets the band
/// radius, or nullopt when alpha < 1/(l+1) and the prediction set is the
/// whole function space.
inline std::optional<std::size_t> quantile_index(std::size_t l, double alpha) {
  check_alpha(alpha);
  if (l < 1) throw Error(ErrorCode::sample_too_small, "calibration set is empty");
  const long long rank = ceil_rank(static_cast<double>(l + 1) * (1.0 - alpha));
  if (rank > static_cast<long long>(l)) return std::nullopt;
  return static_cast<std::size_t>(std::max(rank, 1LL));
}

/// Rank ceil(l + tau - (l+1) alpha) used by the smoothed (randomized) band.
inline long long smoothed_rank(std::size_t l, double alpha, double tau) {
  return ceil_rank(static_cast<double>(l) + tau - static_cast<double>(l + 1) * alpha);
}

/// Exact coverage 1 - floor((l+1) alpha)/(l+1) of a non-smoothed split band.
inline double theoretical_coverage(std::size_t l, double alpha) {
  const double l1 = static_cast<double>(l + 1);
  return 1.0 - static_cast<double>(floor_rank(l1 * alpha)) / l1;
}

/// The rank-th smallest value (1-based) of `values`.
inline double kth_smallest(std::span<const double> values, std::size_t rank) {
  if (rank < 1 || rank > values.size()) {
    throw Error(ErrorCode::invalid_argument, "order statistic rank out of range");
  }
  std::vector<double> tmp(values.begin(), values.end());
  auto nth = tmp.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(tmp.begin(), nth, tmp.end());
  return *nth;
}

/// Linear-interpolation empirical quantile (Hyndman-Fan type 7) of sorted data.
inline double quantile_type7_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::empty_sample, "quantile of empty data");
  const double h = static_cast<double>(sorted.size() - 1) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace confband
