#pragma once

// Split conformal prediction bands for grid-sampled curves, built from the
// modulated supremum distance to a point predictor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confband/error.hpp"
#include "confband/grid.hpp"
#include "confband/modulation.hpp"
#include "confband/quantile.hpp"
#include "confband/rng.hpp"

namespace confband {

/// Partition of {0, ..., n-1} into a training and a calibration part.
struct SplitIndices {
  std::vector<std::size_t> training;
  std::vector<std::size_t> calibration;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return training.size() + calibration.size(); }
};

/// Random split with l = round(n * rho) calibration curves.
inline SplitIndices split(std::size_t n, double rho, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::degenerate_split, "split needs at least 2 curves");
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::degenerate_split, "rho must lie in (0, 1)");
  const auto l = static_cast<std::size_t>(std::llround(static_cast<double>(n) * rho));
  if (l < 1 || l >= n) {
    throw Error(ErrorCode::degenerate_split,
                "split leaves an empty training or calibration set (n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Engine rng = make_engine(seed, 0x5eed);
  // Fisher-Yates with an explicit draw so the partition is stable across standard libraries.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  SplitIndices out;
  out.seed = seed;
  out.training.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n - l));
  out.calibration.assign(perm.begin() + static_cast<std::ptrdiff_t>(n - l), perm.end());
  std::sort(out.training.begin(), out.training.end());
  std::sort(out.calibration.begin(), out.calibration.end());
  return out;
}

/// Randomization state of a smoothed band: tau and the ties to the right
/// (r) and left (v) of the selected score in sorted order.
struct SmoothedParams {
  double tau = 1.0;
  std::size_t tie_right = 0;
  std::size_t tie_left = 0;
};

struct PredictionBand {
  GridPtr grid;
  Curve center;
  double radius_scale = 0.0;
  ModulationCurve modulation;
  Curve lower;
  Curve upper;
  bool closed = true;
  bool full_space = false;
  std::optional<double> lower_clip;
  std::optional<SmoothedParams> smoothed;

  /// Lower bound before any truncation.
  double raw_lower(std::size_t i) const { return center[i] - radius_scale * modulation.curve[i]; }
};

/// [g - k s, g + k s] on the grid.
inline PredictionBand make_band(const Curve& g, double radius, ModulationCurve s, bool closed = true) {
  require_same_grid(g.grid(), s.curve.grid());
  std::vector<double> lo(g.size()), hi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    lo[i] = g[i] - radius * s.curve[i];
    hi[i] = g[i] + radius * s.curve[i];
  }
  PredictionBand band{g.grid_ptr(), g, radius, std::move(s), Curve(g.grid_ptr(), std::move(lo)),
                      Curve(g.grid_ptr(), std::move(hi)), closed, false, std::nullopt, std::nullopt};
  return band;
}

/// The whole function space. Bounds collapse onto the center so that every
/// stored number stays finite; membership is decided by the flag.
inline PredictionBand make_full_space_band(const Curve& g, ModulationCurve s) {
  PredictionBand band = make_band(g, 0.0, std::move(s));
  band.full_space = true;
  return band;
}

/// Modulated sup scores sup_t |y_j(t) - g(t)| / s(t).
inline std::vector<double> scores(const FunctionalSample& calibration, const Curve& g,
                                  const ModulationCurve& s) {
  require_same_grid(calibration.grid(), g.grid());
  require_same_grid(g.grid(), s.curve.grid());
  std::vector<double> out;
  out.reserve(calibration.size());
  for (const Curve& y : calibration) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, std::abs(y[i] - g[i]) / s.curve[i]);
    out.push_back(m);
  }
  return out;
}

inline double score(const Curve& y, const Curve& g, const ModulationCurve& s) {
  FunctionalSample one(g.grid_ptr());
  one.push_back(y);
  return scores(one, g, s).front();
}

/// Conformal p-value |{j : R_j >= R_new}| / (l+1), counting the new curve itself.
inline double p_value(std::span<const double> calibration_scores, double new_score) {
  const auto ge = std::count_if(calibration_scores.begin(), calibration_scores.end(),
                                [new_score](double r) { return r >= new_score; });
  return static_cast<double>(ge + 1) / static_cast<double>(calibration_scores.size() + 1);
}

inline double p_value(const FunctionalSample& calibration, const Curve& g, const ModulationCurve& s,
                      const Curve& y_new) {
  return p_value(scores(calibration, g, s), score(y_new, g, s));
}

/// Point predictor built from the training curves.
using PredictorRule = std::function<Curve(const FunctionalSample&)>;

inline Curve mean_predictor(const FunctionalSample& training) { return mean_curve(training); }

/// Which modulation to build from the training set.
struct ModulationSpec {
  ModulationKind kind = ModulationKind::s_zero;
  std::optional<Curve> fixed;  // used when kind == custom

  static ModulationSpec zero() { return {ModulationKind::s_zero, std::nullopt}; }
  static ModulationSpec sigma() { return {ModulationKind::s_sigma, std::nullopt}; }
  static ModulationSpec sbar() { return {ModulationKind::s_bar_training, std::nullopt}; }
  static ModulationSpec custom(Curve c) { return {ModulationKind::custom, std::move(c)}; }
};

namespace detail {

// `sbar_rank` overrides the trimming rank of the training envelope (smoothed
// bands shift it by tau).
inline ModulationCurve build_modulation(const ModulationSpec& spec, const FunctionalSample& training,
                                        const Curve& g, double alpha,
                                        std::optional<long long> sbar_rank = std::nullopt) {
  switch (spec.kind) {
    case ModulationKind::s_zero:
      return s_zero(g.grid_ptr());
    case ModulationKind::s_sigma:
      return s_sigma(training);
    case ModulationKind::s_bar_training:
      if (sbar_rank) {
        if (*sbar_rank <= 0) return s_zero(g.grid_ptr());
        return s_bar_training_at_rank(training, g, *sbar_rank);
      }
      return s_bar_training(training, g, alpha);
    case ModulationKind::custom:
      if (!spec.fixed) throw Error(ErrorCode::invalid_argument, "custom modulation needs a curve");
      require_same_grid(spec.fixed->grid(), g.grid());
      return normalize(*spec.fixed, ModulationKind::custom);
    case ModulationKind::s_bar_calibration:
      break;
  }
  throw Error(ErrorCode::invalid_argument,
              "the calibration envelope depends on calibration data and cannot drive a band");
}

struct SplitParts {
  FunctionalSample training;
  FunctionalSample calibration;
};

inline SplitParts apply_split(const FunctionalSample& sample, const SplitIndices& sp) {
  if (sp.n() != sample.size()) {
    throw Error(ErrorCode::degenerate_split, "split indices do not match the sample size");
  }
  if (sp.training.empty() || sp.calibration.empty()) {
    throw Error(ErrorCode::degenerate_split, "training and calibration sets must be non-empty");
  }
  return {sample.subset(sp.training), sample.subset(sp.calibration)};
}

}  // namespace detail

/// Non-smoothed band from an already fitted predictor and modulation.
inline PredictionBand calibrate_band(const FunctionalSample& calibration, const Curve& g,
                                     ModulationCurve s, double alpha) {
  const auto rank = quantile_index(calibration.size(), alpha);
  if (!rank) return make_full_space_band(g, std::move(s));
  const auto r = scores(calibration, g, s);
  return make_band(g, kth_smallest(r, *rank), std::move(s));
}

inline PredictionBand fit_band(const FunctionalSample& sample, double alpha, const SplitIndices& sp,
                               const PredictorRule& g_rule = mean_predictor,
                               const ModulationSpec& s_rule = ModulationSpec::zero()) {
  check_alpha(alpha);
  auto parts = detail::apply_split(sample, sp);
  Curve g = g_rule(parts.training);
  ModulationCurve s = detail::build_modulation(s_rule, parts.training, g, alpha);
  return calibrate_band(parts.calibration, g, std::move(s), alpha);
}

/// Smoothed band from a fitted predictor and modulation. Ties are detected
/// by exact equality of scores.
inline PredictionBand calibrate_band_smoothed(const FunctionalSample& calibration, const Curve& g,
                                              ModulationCurve s, double alpha, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::invalid_argument, "tau must lie in [0, 1]");
  const std::size_t l = calibration.size();
  const double l1 = static_cast<double>(l + 1);
  if (!(alpha >= tau / l1 && alpha < (static_cast<double>(l) + tau) / l1)) {
    throw Error(ErrorCode::alpha_out_of_range,
                "smoothed band requires tau/(l+1) <= alpha < (l+tau)/(l+1)");
  }
  const long long rank = std::clamp(smoothed_rank(l, alpha, tau), 1LL, static_cast<long long>(l));
  auto r = scores(calibration, g, s);
  std::sort(r.begin(), r.end());
  const auto pos = static_cast<std::size_t>(rank - 1);
  const double w = r[pos];
  SmoothedParams params{tau, 0, 0};
  for (std::size_t i = pos + 1; i < l && r[i] == w; ++i) ++params.tie_right;
  for (std::size_t i = pos; i > 0 && r[i - 1] == w; --i) ++params.tie_left;
  const double threshold =
      (l1 * alpha - static_cast<double>(floor_rank(l1 * alpha - tau)) + static_cast<double>(params.tie_right)) /
      static_cast<double>(params.tie_right + params.tie_left + 2);
  PredictionBand band = make_band(g, w, std::move(s), tau > threshold);
  band.smoothed = params;
  return band;
}

/// Smoothed split conformal band with randomization tau in [0, 1].
inline PredictionBand fit_band_smoothed(const FunctionalSample& sample, double alpha, const SplitIndices& sp,
                                        const PredictorRule& g_rule, const ModulationSpec& s_rule,
                                        double tau) {
  auto parts = detail::apply_split(sample, sp);
  Curve g = g_rule(parts.training);
  const std::size_t m = parts.training.size();
  const long long sbar_rank = smoothed_rank(m, alpha, tau);
  ModulationCurve s = detail::build_modulation(s_rule, parts.training, g, alpha, sbar_rank);
  return calibrate_band_smoothed(parts.calibration, g, std::move(s), alpha, tau);
}

/// Membership of a single value at grid index i.
inline bool contains_at(const PredictionBand& band, std::size_t i, double y) {
  if (band.full_space) return true;
  const double lo = band.lower[i];
  const double hi = band.upper[i];
  if (band.closed) return lo <= y && y <= hi;
  // A truncated lower bound is a hard constraint, so it stays inclusive.
  const bool clipped_here = band.lower_clip && *band.lower_clip > band.raw_lower(i);
  const bool above = clipped_here ? lo <= y : lo < y;
  return above && y < hi;
}

inline bool contains(const PredictionBand& band, const Curve& y) {
  require_same_grid(band.lower.grid(), y.grid());
  if (band.full_space) return true;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!contains_at(band, i, y[i])) return false;
  }
  return true;
}

/// Concatenation of per-point conformal intervals with radius
/// k(t) = rank-th smallest |y_j(t) - g(t)| over the calibration curves.
inline PredictionBand pointwise_band(const FunctionalSample& sample, double alpha, const SplitIndices& sp,
                                     const PredictorRule& g_rule = mean_predictor) {
  check_alpha(alpha);
  auto parts = detail::apply_split(sample, sp);
  Curve g = g_rule(parts.training);
  const std::size_t l = parts.calibration.size();
  const auto rank = quantile_index(l, alpha);
  if (!rank) return make_full_space_band(g, {Curve::constant(g.grid_ptr(), 1.0), ModulationKind::custom});
  std::vector<double> radius(g.size());
  std::vector<double> column(l);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < l; ++j) column[j] = std::abs(parts.calibration[j][i] - g[i]);
    radius[i] = kth_smallest(column, *rank);
  }
  return make_band(g, 1.0, {Curve(g.grid_ptr(), std::move(radius)), ModulationKind::custom});
}

/// Pointwise empirical quantiles (type 7) at alpha/2 and 1 - alpha/2 of the
/// full sample. Carries no coverage guarantee.
inline PredictionBand naive_band(const FunctionalSample& sample, double alpha) {
  check_alpha(alpha);
  if (sample.size() < 2) throw Error(ErrorCode::sample_too_small, "naive band needs at least 2 curves");
  const std::size_t p = sample.grid().size();
  std::vector<double> lo(p), hi(p), center(p), half(p), column(sample.size());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < sample.size(); ++j) column[j] = sample[j][i];
    std::sort(column.begin(), column.end());
    lo[i] = quantile_type7_sorted(column, alpha / 2.0);
    hi[i] = quantile_type7_sorted(column, 1.0 - alpha / 2.0);
    center[i] = 0.5 * (lo[i] + hi[i]);
    half[i] = 0.5 * (hi[i] - lo[i]);
  }
  PredictionBand band = make_band(Curve(sample.grid_ptr(), std::move(center)), 1.0,
                                  {Curve(sample.grid_ptr(), std::move(half)), ModulationKind::custom});
  // Keep the quantiles themselves as bounds rather than center +- half.
  band.lower = Curve(sample.grid_ptr(), std::move(lo));
  band.upper = Curve(sample.grid_ptr(), std::move(hi));
  return band;
}

/// Clips the lower bound at `lower_limit` (e.g. 0 for nonnegative data).
inline PredictionBand truncate(PredictionBand band, double lower_limit) {
  if (band.full_space) return band;
  const double clip = band.lower_clip ? std::max(*band.lower_clip, lower_limit) : lower_limit;
  band.lower_clip = clip;
  band.lower = map_values(band.lower, [clip](double v) { return std::max(v, clip); });
  return band;
}

}  // namespace confband
