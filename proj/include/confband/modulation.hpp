#pragma once

// Modulation functions: strictly positive, unit-integral curves that rescale
// residuals so the band width can vary along the domain.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confband/error.hpp"
#include "confband/grid.hpp"
#include "confband/quantile.hpp"

namespace confband {

enum class ModulationKind { s_zero, s_sigma, s_bar_training, s_bar_calibration, custom };

inline std::string_view to_string(ModulationKind k) noexcept {
  switch (k) {
    case ModulationKind::s_zero: return "s0";
    case ModulationKind::s_sigma: return "sigma";
    case ModulationKind::s_bar_training: return "sbar";
    case ModulationKind::s_bar_calibration: return "sbar_c";
    case ModulationKind::custom: return "custom";
  }
  return "custom";
}

inline ModulationKind modulation_kind_from_string(std::string_view s) {
  if (s == "s0") return ModulationKind::s_zero;
  if (s == "sigma") return ModulationKind::s_sigma;
  if (s == "sbar") return ModulationKind::s_bar_training;
  if (s == "sbar_c") return ModulationKind::s_bar_calibration;
  if (s == "custom") return ModulationKind::custom;
  throw Error(ErrorCode::invalid_argument, "unknown modulation kind '" + std::string(s) + "'");
}

/// A modulation curve tagged with where it came from. Curves produced by
/// normalize() are strictly positive with unit integral; band builders that
/// carry a raw radius profile (pointwise, naive) store it with kind custom.
struct ModulationCurve {
  Curve curve;
  ModulationKind kind = ModulationKind::custom;
};

/// Calibration (or training) indices whose sup-distance to the predictor is
/// at most `threshold`, the `quantile_index`-th smallest such distance.
struct TrimmedIndexSet {
  std::vector<std::size_t> kept;
  double threshold = 0.0;
  std::size_t quantile_index = 0;
};

/// Relative size of the shift applied to envelopes that touch zero.
inline constexpr double positivity_epsilon_rel = 1e-6;

inline Curve adjust_positive(const Curve& curve, double epsilon) {
  bool any_positive = false;
  for (double v : curve.values()) {
    if (v < 0.0) throw Error(ErrorCode::nonpositive_value, "adjust_positive expects a nonnegative curve");
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) {
    throw Error(ErrorCode::pathological_input, "curve is identically zero; no modulation can be built");
  }
  return map_values(curve, [epsilon](double v) { return v + epsilon; });
}

/// Canonical unit-integral representative of a strictly positive curve.
inline ModulationCurve normalize(const Curve& curve, ModulationKind kind = ModulationKind::custom) {
  for (double v : curve.values()) {
    if (!(v > 0.0)) throw Error(ErrorCode::nonpositive_value, "modulation must be strictly positive");
  }
  const double area = integrate(curve);
  return {map_values(curve, [area](double v) { return v / area; }), kind};
}

namespace detail {
// Leaves strictly positive curves alone; shifts the others by a small amount
// proportional to their maximum before normalizing.
inline ModulationCurve adjust_and_normalize(const Curve& raw, ModulationKind kind) {
  const auto v = raw.values();
  if (*std::min_element(v.begin(), v.end()) > 0.0) return normalize(raw, kind);
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::pathological_input,
                "envelope is identically zero; every retained curve equals the predictor");
  }
  return normalize(adjust_positive(raw, positivity_epsilon_rel * peak), kind);
}
}  // namespace detail

inline ModulationCurve s_zero(const GridPtr& grid) {
  return {Curve::constant(grid, 1.0 / grid->length()), ModulationKind::s_zero};
}

/// Normalized pointwise standard deviation of the training curves.
inline ModulationCurve s_sigma(const FunctionalSample& training) {
  return detail::adjust_and_normalize(std_curve(training), ModulationKind::s_sigma);
}

/// sup_t |y_j(t) - g(t)| for every curve of the sample.
inline std::vector<double> sup_distances(const FunctionalSample& sample, const Curve& g) {
  std::vector<double> out;
  out.reserve(sample.size());
  for (const Curve& y : sample) out.push_back(sup_abs_diff(y, g));
  return out;
}

/// Keeps every index whose distance is <= the rank-th smallest distance.
/// Ties at the threshold are all retained.
inline TrimmedIndexSet trim_by_rank(std::span<const double> distances, std::size_t rank) {
  TrimmedIndexSet out;
  out.quantile_index = rank;
  out.threshold = kth_smallest(distances, rank);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] <= out.threshold) out.kept.push_back(i);
  }
  return out;
}

/// Pointwise max over the kept curves of |y_j(t) - g(t)|, not normalized.
inline Curve trimmed_envelope(const FunctionalSample& sample, const Curve& g,
                              std::span<const std::size_t> kept) {
  require_same_grid(sample.grid(), g.grid());
  std::vector<double> env(g.size(), 0.0);
  for (std::size_t j : kept) {
    const Curve& y = sample[j];
    for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::max(env[i], std::abs(y[i] - g[i]));
  }
  return Curve(g.grid_ptr(), std::move(env));
}

/// Training-set envelope modulation at an explicit trimming rank. A rank
/// above the sample size keeps every curve.
inline ModulationCurve s_bar_training_at_rank(const FunctionalSample& training, const Curve& g,
                                              long long rank) {
  if (training.empty()) throw Error(ErrorCode::empty_sample, "training sample is empty");
  const auto dist = sup_distances(training, g);
  std::vector<std::size_t> kept;
  if (rank > static_cast<long long>(training.size())) {
    kept.resize(training.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  } else {
    kept = trim_by_rank(dist, static_cast<std::size_t>(std::max(rank, 1LL))).kept;
  }
  return detail::adjust_and_normalize(trimmed_envelope(training, g, kept),
                                      ModulationKind::s_bar_training);
}

/// Envelope of the least extreme training curves, trimmed at rank
/// ceil((m+1)(1-alpha)); usable as a modulation since it only sees training data.
inline ModulationCurve s_bar_training(const FunctionalSample& training, const Curve& g, double alpha) {
  check_alpha(alpha);
  const double m1 = static_cast<double>(training.size() + 1);
  return s_bar_training_at_rank(training, g, ceil_rank(m1 * (1.0 - alpha)));
}

/// Calibration-set analogue of s_bar_training. It depends on the calibration
/// data, so it is an analysis object rather than a valid modulation choice.
inline std::pair<ModulationCurve, TrimmedIndexSet> s_bar_calibration(const FunctionalSample& calibration,
                                                                     const Curve& g, double alpha) {
  check_alpha(alpha);
  if (calibration.empty()) throw Error(ErrorCode::empty_sample, "calibration sample is empty");
  const auto rank = quantile_index(calibration.size(), alpha);
  if (!rank) {
    throw Error(ErrorCode::alpha_too_small,
                "alpha < 1/(l+1): the calibration quantile does not exist");
  }
  const auto dist = sup_distances(calibration, g);
  TrimmedIndexSet set = trim_by_rank(dist, *rank);
  ModulationCurve s = detail::adjust_and_normalize(trimmed_envelope(calibration, g, set.kept),
                                                   ModulationKind::s_bar_calibration);
  return {std::move(s), std::move(set)};
}

}  // namespace confband
