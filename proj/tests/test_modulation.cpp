#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "confband/conformal.hpp"
#include "confband/modulation.hpp"
#include "oracles.hpp"

using namespace confband;
using Catch::Approx;

namespace {

bool has_code(const Error& e, ErrorCode c) { return e.code() == c; }

FunctionalSample random_sample(const GridPtr& g, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  FunctionalSample s(g);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = nd(rng), b = nd(rng), c = nd(rng);
    s.push_back(Curve::from_function(g, [&](double t) { return a + b * std::cos(5 * t) + c * t * t + 0.1 * nd(rng); }));
  }
  return s;
}

void check_curve_approx(const Curve& a, const Curve& b, double rel) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Approx(b[i]).epsilon(rel));
}

}  // namespace

TEST_CASE("s_zero is the constant 1/|T|", "[modulation]") {
  CHECK(s_zero(make_uniform_grid(0, 1, 5)).curve == Curve::constant(make_uniform_grid(0, 1, 5), 1.0));
  CHECK(s_zero(make_uniform_grid(0, 2, 5)).curve[3] == 0.5);
  const auto s = s_zero(make_uniform_grid(4, 18, 141));
  CHECK(s.curve[0] == 1.0 / 14.0);
  CHECK(s.kind == ModulationKind::s_zero);
  CHECK(integrate(s.curve) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("s_sigma", "[modulation]") {
  SECTION("equal pointwise variance gives s0") {
    auto g = make_uniform_grid(0, 1, 11);
    FunctionalSample tr(g);
    for (double c : {0.0, 1.0, 2.5}) tr.push_back(Curve::from_function(g, [c](double t) { return c + std::sin(t); }));
    check_curve_approx(s_sigma(tr).curve, s_zero(g).curve, 1e-12);
  }
  SECTION("two-point hand example") {
    auto g = make_uniform_grid(0, 1, 2);
    const auto s = s_sigma(FunctionalSample(g, {Curve(g, {0, 0}), Curve(g, {2, 4})}));
    // (sqrt2, 2 sqrt2) divided by the trapezoid area 3 sqrt2 / 2.
    CHECK(s.curve[0] == Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(s.curve[1] == Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(s.kind == ModulationKind::s_sigma);
  }
  SECTION("scaling the data does not change it") {
    std::mt19937_64 rng(1);
    auto g = make_uniform_grid(0, 1, 21);
    const auto tr = random_sample(g, 8, rng);
    FunctionalSample big(g);
    for (const auto& c : tr) big.push_back(scaled(c, 7.3));
    check_curve_approx(s_sigma(tr).curve, s_sigma(big).curve, 1e-12);
  }
  SECTION("needs two curves") {
    auto g = make_uniform_grid(0, 1, 2);
    CHECK_THROWS_MATCHES(s_sigma(FunctionalSample(g, {Curve(g, {0, 0})})), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return has_code(e, ErrorCode::sample_too_small); }));
  }
}

TEST_CASE("s_bar_training", "[modulation]") {
  auto g3 = make_uniform_grid(0, 1, 3);
  SECTION("m = 1 keeps the single curve") {
    const Curve gc = Curve::constant(g3, 0.0);
    const Curve y(g3, {1.0, -2.0, 3.0});
    const auto s = s_bar_training(FunctionalSample(g3, {y}), gc, 0.1);
    check_curve_approx(s.curve, normalize(Curve(g3, {1.0, 2.0, 3.0})).curve, 1e-14);
  }
  SECTION("constant offset gives s0") {
    const Curve gc(g3, {0.2, 0.4, -0.1});
    const Curve y = map_values(gc, [](double v) { return v + 0.7; });
    check_curve_approx(s_bar_training(FunctionalSample(g3, {y}), gc, 0.1).curve, s_zero(g3).curve, 1e-12);
  }
  SECTION("m = 10, alpha = 0.5 trims to the six least extreme curves") {
    std::mt19937_64 rng(42);
    auto g = make_uniform_grid(0, 1, 15);
    const auto tr = random_sample(g, 10, rng);
    const Curve gc = mean_curve(tr);
    std::vector<double> d;
    for (const auto& y : tr) d.push_back(sup_abs_diff(y, gc));
    const double gamma = oracle::kth(d, 6);  // ceil(11 * 0.5) = 6
    std::vector<double> env(g->size(), 0.0);
    int kept = 0;
    for (std::size_t j = 0; j < tr.size(); ++j) {
      if (d[j] > gamma) continue;
      ++kept;
      for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::max(env[i], std::abs(tr[j][i] - gc[i]));
    }
    CHECK(kept == 6);
    const Curve expected = normalize(Curve(g, env)).curve;
    check_curve_approx(s_bar_training(tr, gc, 0.5).curve, expected, 1e-14);
  }
  SECTION("all kept curves equal g is pathological") {
    const Curve gc = Curve::constant(g3, 1.0);
    CHECK_THROWS_MATCHES(s_bar_training(FunctionalSample(g3, {gc, gc}), gc, 0.5), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return has_code(e, ErrorCode::pathological_input); }));
  }
}

TEST_CASE("s_bar_calibration", "[modulation]") {
  auto g = make_uniform_grid(0, 1, 5);
  const Curve zero = Curve::constant(g, 0.0);
  auto offsets = [&](std::vector<double> cs) {
    FunctionalSample s(g);
    for (double c : cs) s.push_back(Curve::constant(g, c));
    return s;
  };
  SECTION("equal constant distance gives s0") {
    FunctionalSample cal(g, {Curve::constant(g, 2.0), Curve::constant(g, -2.0), Curve::constant(g, 2.0)});
    auto [s, set] = s_bar_calibration(cal, zero, 0.25);
    check_curve_approx(s.curve, s_zero(g).curve, 1e-12);
    CHECK(s.kind == ModulationKind::s_bar_calibration);
  }
  SECTION("l = 3, alpha = 0.25") {
    auto [s, set] = s_bar_calibration(offsets({2.0, 1.0, 3.0}), zero, 0.25);
    CHECK(set.quantile_index == 3);
    CHECK(set.threshold == 3.0);
    CHECK(set.kept == std::vector<std::size_t>{0, 1, 2});
  }
  SECTION("l = 4, alpha = 0.4") {
    auto [s, set] = s_bar_calibration(offsets({4.0, 1.0, 3.0, 2.0}), zero, 0.4);
    CHECK(set.quantile_index == 3);
    CHECK(set.threshold == 3.0);
    CHECK(set.kept == std::vector<std::size_t>{1, 2, 3});
  }
  SECTION("alpha below 1/(l+1)") {
    CHECK_THROWS_MATCHES(s_bar_calibration(offsets({1.0, 2.0, 3.0}), zero, 0.1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return has_code(e, ErrorCode::alpha_too_small); }));
  }
  SECTION("ties at the threshold are all kept") {
    auto [s, set] = s_bar_calibration(offsets({1.0, 2.0, 2.0, 5.0}), zero, 0.5);
    // ceil(5 * 0.5) = 3 -> threshold 2, both curves at distance 2 retained.
    CHECK(set.kept.size() == 3);
  }
}

TEST_CASE("adjust_positive and normalize", "[modulation]") {
  auto g = make_uniform_grid(0, 1, 3);
  const Curve a = adjust_positive(Curve(g, {0.0, 1.0, 2.0}), 1e-6);
  CHECK(a[0] == 1e-6);
  CHECK(a[1] == 1.000001);
  CHECK(a[2] == 2.000001);
  CHECK_THROWS_MATCHES(adjust_positive(Curve::constant(g, 0.0), 1e-6), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return has_code(e, ErrorCode::pathological_input); }));

  CHECK(normalize(Curve::constant(make_uniform_grid(0, 1, 4), 5.0)).curve[2] == Approx(1.0).epsilon(1e-15));
  CHECK(normalize(Curve::constant(make_uniform_grid(0, 2, 4), 5.0)).curve[2] == Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_MATCHES(normalize(Curve(g, {1.0, 0.0, 1.0})), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return has_code(e, ErrorCode::nonpositive_value); }));
}

TEST_CASE("positivity adjustment widens the band where the envelope is positive", "[modulation]") {
  // Calibration residuals vanish at t = 0, so the envelope (0, 2, 4) needs adjusting.
  auto g = make_uniform_grid(0, 1, 3);
  const Curve zero = Curve::constant(g, 0.0);
  FunctionalSample cal(g, {Curve(g, {0, 1, 2}), Curve(g, {0, 0.5, 1}), Curve(g, {0, 2, 4})});
  auto [s, set] = s_bar_calibration(cal, zero, 0.25);
  CHECK(s.curve[0] > 0.0);
  const PredictionBand adjusted = calibrate_band(cal, zero, s, 0.25);
  // Without adjustment, on the points where the envelope is positive:
  // scores max(|y|/env) = {0.5, 0.25, 1}, k = 1, radius = env = (., 2, 4).
  CHECK(adjusted.upper[1] >= 2.0 * (1 - 1e-12));
  CHECK(adjusted.upper[2] >= 4.0 * (1 - 1e-12));
  CHECK(adjusted.lower[1] <= -2.0 * (1 - 1e-12));
  CHECK(adjusted.lower[2] <= -4.0 * (1 - 1e-12));
}

TEST_CASE("normalize picks one representative per scaling class", "[modulation][property]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  auto g = make_uniform_grid(0, 3, 31);
  for (int trial = 0; trial < 100; ++trial) {
    const Curve x = Curve::from_function(g, [&](double) { return u(rng); });
    const double lambda = u(rng) * 3.0;
    const Curve a = normalize(x).curve, b = normalize(scaled(x, lambda)).curve;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * a[i]);
    CHECK(integrate(a) == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("trimmed calibration set properties", "[modulation][property]") {
  std::mt19937_64 rng(21);
  auto g = make_uniform_grid(0, 1, 25);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cal = random_sample(g, 20, rng);
    const Curve gc = Curve::constant(g, 0.1);
    const auto d = sup_distances(cal, gc);
    for (double alpha : {0.1, 0.25, 0.5}) {
      auto [s, set] = s_bar_calibration(cal, gc, alpha);
      CHECK(set.kept.size() == static_cast<std::size_t>(std::ceil(21 * (1 - alpha) - 1e-12)));
      for (std::size_t j = 0; j < d.size(); ++j) {
        const bool kept = std::find(set.kept.begin(), set.kept.end(), j) != set.kept.end();
        if (!kept) CHECK(d[j] > set.threshold);
      }
      for (double v : s.curve.values()) CHECK(v > 0.0);
      CHECK(integrate(s.curve) == Approx(1.0).epsilon(1e-9));
    }
    // Smaller alpha keeps more curves, so the raw envelope can only grow.
    auto [s_lo, set_lo] = s_bar_calibration(cal, gc, 0.1);
    auto [s_hi, set_hi] = s_bar_calibration(cal, gc, 0.5);
    const Curve env_lo = trimmed_envelope(cal, gc, set_lo.kept);
    const Curve env_hi = trimmed_envelope(cal, gc, set_hi.kept);
    for (std::size_t i = 0; i < env_lo.size(); ++i) CHECK(env_lo[i] >= env_hi[i]);
  }
}
