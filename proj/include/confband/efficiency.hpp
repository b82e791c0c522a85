#pragma once

// Band size and the checks relating it to the calibration envelope.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "confband/conformal.hpp"
#include "confband/grid.hpp"
#include "confband/modulation.hpp"

namespace confband {

struct SizeMetric {
  /// Area between the bounds (trapezoid rule).
  double q = 0.0;
  /// q / |T|.
  double average_width = 0.0;
  /// 2 * radius_scale * integral(modulation); equals q unless the band was truncated.
  double q_radius = 0.0;
  ModulationKind modulation_kind = ModulationKind::custom;
  bool infinite = false;
  bool clipped = false;
};

inline SizeMetric band_size(const PredictionBand& band) {
  SizeMetric m;
  m.modulation_kind = band.modulation.kind;
  if (band.full_space) {
    m.infinite = true;
    m.q = m.average_width = m.q_radius = std::numeric_limits<double>::infinity();
    return m;
  }
  m.q = integrate(zip_with(band.upper, band.lower, [](double u, double l) { return u - l; }));
  m.average_width = m.q / band.grid->length();
  m.q_radius = 2.0 * band.radius_scale * integrate(band.modulation.curve);
  m.clipped = band.lower_clip.has_value();
  return m;
}

struct EnvelopeIdentity {
  double k_sbar_c = 0.0;
  double envelope_integral = 0.0;
};

/// The radius obtained by scoring the calibration set against its own
/// trimmed envelope equals the integral of that envelope.
inline EnvelopeIdentity envelope_identity(const FunctionalSample& calibration, const Curve& g, double alpha) {
  auto [s, set] = s_bar_calibration(calibration, g, alpha);
  const auto r = scores(calibration, g, s);
  return {kth_smallest(r, set.quantile_index), integrate(trimmed_envelope(calibration, g, set.kept))};
}

struct Theorem3Result {
  double q_s0 = 0.0;
  double q_sbar_c = 0.0;
  /// Envelope constant over the grid (within 1e-9 relative).
  bool equality = false;
  bool holds = false;
};

/// Compares the unmodulated band size 2|T| max(env) with 2 * integral(env).
inline Theorem3Result theorem3_check(const FunctionalSample& calibration, const Curve& g, double alpha) {
  auto [s, set] = s_bar_calibration(calibration, g, alpha);
  const Curve env = trimmed_envelope(calibration, g, set.kept);
  const auto v = env.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  Theorem3Result out;
  out.q_s0 = 2.0 * g.grid().length() * *hi;
  out.q_sbar_c = 2.0 * integrate(env);
  out.equality = (*hi - *lo) <= 1e-9 * *hi;
  out.holds = out.q_s0 >= out.q_sbar_c - 1e-9 * out.q_s0;
  return out;
}

enum class Theorem4Violation {
  none,
  score_ties,          // |H2| differs from ceil((l+1)(1-alpha))
  identical_to_sbar_c, // condition 1
  dominance,           // condition 2
};

struct Theorem4Result {
  bool applicable = false;
  Theorem4Violation violation = Theorem4Violation::none;
  /// Calibration index failing condition 2, when that is the violation.
  std::optional<std::size_t> failing_index;
  /// Condition 2 gives the same verdict at every argmax of every extreme curve.
  bool argmax_invariant = true;
  double q_sd = 0.0;
  double q_sbar_c = 0.0;
  bool strictly_larger = false;
};

/// Checks whether a candidate modulation s_d meets the hypotheses under
/// which its band must be strictly larger than the calibration-envelope
/// band, and reports both sizes. argmax ties pick the smallest grid index.
inline Theorem4Result theorem4_check(const ModulationCurve& s_d, const FunctionalSample& calibration,
                                     const Curve& g, double alpha) {
  require_same_grid(s_d.curve.grid(), g.grid());
  auto [sc, set] = s_bar_calibration(calibration, g, alpha);
  Theorem4Result out;

  const auto rd = scores(calibration, g, s_d);
  const auto rc = scores(calibration, g, sc);
  out.q_sd = 2.0 * kth_smallest(rd, set.quantile_index) * integrate(s_d.curve);
  out.q_sbar_c = 2.0 * kth_smallest(rc, set.quantile_index);
  out.strictly_larger = out.q_sd > out.q_sbar_c * (1.0 + 1e-9);

  if (set.kept.size() != set.quantile_index) {
    out.violation = Theorem4Violation::score_ties;
    return out;
  }

  bool differs = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(s_d.curve[i] - sc.curve[i]) > 1e-9 * sc.curve[i]) differs = true;
  }
  if (!differs) {
    out.violation = Theorem4Violation::identical_to_sbar_c;
    return out;
  }

  std::vector<bool> kept(calibration.size(), false);
  for (std::size_t j : set.kept) kept[j] = true;
  for (std::size_t j = 0; j < calibration.size(); ++j) {
    if (kept[j]) continue;
    const Curve& y = calibration[j];
    double peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) peak = std::max(peak, std::abs(y[i] - g[i]));
    std::optional<bool> first_verdict;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(y[i] - g[i]) != peak) continue;
      const bool ok = s_d.curve[i] <= sc.curve[i];
      if (!first_verdict) {
        first_verdict = ok;
        if (!ok && !out.failing_index) {
          out.violation = Theorem4Violation::dominance;
          out.failing_index = j;
        }
      } else if (ok != *first_verdict) {
        out.argmax_invariant = false;
      }
    }
  }
  out.applicable = out.violation == Theorem4Violation::none;
  return out;
}

}  // namespace confband
