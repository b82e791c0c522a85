#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "confband/bspline.hpp"
#include "confband/experiment.hpp"
#include "confband/mvn.hpp"
#include "confband/scenario.hpp"
#include "oracles.hpp"

using namespace confband;
using Catch::Approx;

namespace {

const std::vector<double> knots{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

}  // namespace

TEST_CASE("B-spline basis", "[simulation]") {
  const BSplineBasis basis(4, knots);
  CHECK(basis.size() == 13);
  const auto at0 = basis(0.0);
  CHECK(at0[0] == 1.0);
  CHECK(std::accumulate(at0.begin() + 1, at0.end(), 0.0) == 0.0);
  const auto at1 = basis(1.0);
  CHECK(at1[12] == Approx(1.0));
  const auto full = oracle::clamped_knots(4, knots, 0.0, 1.0);
  for (int k = 0; k <= 200; ++k) {
    const double t = k / 200.0;
    const auto v = basis(t);
    CHECK(std::accumulate(v.begin(), v.end(), 0.0) == Approx(1.0).epsilon(1e-13));
    for (std::size_t j = 0; j < v.size(); ++j) {
      CHECK(v[j] >= 0.0);
      CHECK(v[j] == Approx(oracle::cox_de_boor(full, j, 4, t, 1.0)).margin(1e-13));
    }
  }
  CHECK_THROWS_AS(basis(1.5), Error);
  CHECK(bspline_basis(2, {0.5}, 0.25) == std::vector<double>{0.5, 0.5, 0.0});
}

TEST_CASE("multivariate normal", "[simulation]") {
  SECTION("zero covariance returns the mean") {
    Engine rng = make_engine(3);
    Eigen::VectorXd mean(2);
    mean << 1.5, -2.0;
    const auto x = mvn_sample(mean, Eigen::MatrixXd::Zero(2, 2), rng);
    CHECK(x(0) == 1.5);
    CHECK(x(1) == -2.0);
  }
  SECTION("moments") {
    Engine rng = make_engine(4);
    const auto m = s1_coefficients();
    const MultivariateNormal mvn(m.mean, m.covariance);
    CHECK((mvn.factor() * mvn.factor().transpose()).isApprox(m.covariance, 1e-12));
    const int n = 100000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < n; ++i) {
      const auto x = mvn(rng);
      mu += x;
      acc += x * x.transpose();
    }
    mu /= n;
    const Eigen::MatrixXd cov = acc / n - mu * mu.transpose();
    CHECK(std::abs(cov(0, 1) - 0.6) < 0.01);
    CHECK(std::abs(cov(1, 2) - 0.6) < 0.01);
    CHECK(std::abs(cov(2, 2) - 1.0) < 0.02);
    CHECK(mu.cwiseAbs().maxCoeff() < 0.02);
  }
  SECTION("rejects indefinite matrices") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(MultivariateNormal(Eigen::VectorXd::Zero(2), bad), Error);
  }
}

TEST_CASE("scenarios", "[simulation]") {
  SECTION("S1 with a degenerate law is a constant") {
    ScenarioConfig cfg;
    cfg.n = 5;
    Eigen::VectorXd mean(3);
    mean << 1.0, 0.0, 0.0;
    cfg.coefficients = CoefficientModel{mean, Eigen::MatrixXd::Zero(3, 3)};
    for (const auto& y : gen_scenario(cfg)) {
      for (double v : y.values()) CHECK(v == Approx(1.0).margin(1e-15));
    }
  }
  SECTION("same seed, same sample") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioTag::s3;
    cfg.n = 20;
    const auto a = gen_scenario(cfg), b = gen_scenario(cfg);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  SECTION("S2 variance dips near the middle") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioTag::s2;
    cfg.n = 4000;
    const auto sd = std_curve(gen_scenario(cfg));
    // Index 50 is t = 0.5, where the 7th coefficient dominates.
    CHECK(sd[50] < 0.5 * sd[20]);
    CHECK(sd[50] < 0.5 * sd[80]);
  }
  SECTION("S3 outlier fraction") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioTag::s3;
    cfg.grid = make_uniform_grid(0, 1, 11);
    const ScenarioGenerator gen(cfg);
    Engine rng = make_engine(9);
    int outliers = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) outliers += gen.draw_labeled(rng).second ? 1 : 0;
    CHECK(std::abs(outliers / double(n) - 0.06) < 0.01);
  }
  SECTION("spline scenarios reject grids outside [0, 1]") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioTag::s2;
    cfg.grid = make_uniform_grid(0, 2, 11);
    CHECK_THROWS_AS(ScenarioGenerator(cfg), Error);
  }
}

TEST_CASE("experiment harness", "[simulation]") {
  ExperimentConfig cfg;
  cfg.scenario.scenario = ScenarioTag::s2;
  cfg.scenario.n = 18;
  cfg.scenario.grid = make_uniform_grid(0, 1, 21);
  cfg.replications = 12;
  cfg.test_curves = 200;
  SECTION("deterministic and independent of the thread count") {
    cfg.threads = 1;
    const auto a = run_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].coverage == b.records[i].coverage);
      CHECK(a.records[i].q == b.records[i].q);
    }
    CHECK(a.failures.empty());
    CHECK(a.coverage.rows.size() == 4);
    for (const auto& row : a.coverage.rows) {
      CHECK(row.ci_low <= row.mean);
      CHECK(row.mean <= row.ci_high);
    }
  }
  SECTION("theoretical coverage") {
    cfg.replications = 2;
    cfg.scenario.n = 18;
    CHECK(run_experiment(cfg).coverage.theoretical == Approx(0.9));
    cfg.scenario.n = 198;
    CHECK(run_experiment(cfg).coverage.theoretical == Approx(0.9));
    cfg.scenario.n = 20;
    cfg.alpha = 0.25;
    CHECK(run_experiment(cfg).coverage.theoretical == Approx(9.0 / 11.0));
    cfg.smoothed = true;
    const auto s = run_experiment(cfg);
    CHECK(s.coverage.theoretical == Approx(0.75));
    CHECK(s.records[0].tau.has_value());
  }
  SECTION("bad configs") {
    cfg.methods.clear();
    CHECK_THROWS_AS(run_experiment(cfg), Error);
  }
}

TEST_CASE("coverage helpers", "[simulation]") {
  auto g = make_uniform_grid(0, 1, 3);
  const auto band = make_band(Curve::constant(g, 0.0), 1.0, s_zero(g));
  FunctionalSample test(g, {Curve::constant(g, 0.5), Curve(g, {0, 2, 0}), Curve::constant(g, 3.0), Curve::constant(g, -1.0)});
  CHECK(coverage_fraction(band, test) == 0.5);
  const Curve pc = pointwise_coverage(band, test);
  CHECK(pc[0] == 0.75);
  CHECK(pc[1] == 0.5);
  CHECK(pc[2] == 0.75);

  ScenarioConfig cfg;
  Engine rng = make_engine(5);
  const auto full = make_full_space_band(Curve::constant(cfg.grid, 0.0), s_zero(cfg.grid));
  CHECK(empirical_conditional_coverage(full, cfg, 10, rng) == 1.0);
}
