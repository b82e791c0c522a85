#pragma once

// Simulated functional data: a phase-shifted trigonometric process with
// constant pointwise variance (S1), a cubic B-spline process whose variance
// dips mid-domain (S2), and S2 contaminated by a high-variance component (S3).

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confband/bspline.hpp"
#include "confband/error.hpp"
#include "confband/grid.hpp"
#include "confband/mvn.hpp"
#include "confband/rng.hpp"

namespace confband {

enum class ScenarioTag { s1, s2, s3 };

inline std::string_view to_string(ScenarioTag s) noexcept {
  switch (s) {
    case ScenarioTag::s1: return "S1";
    case ScenarioTag::s2: return "S2";
    case ScenarioTag::s3: return "S3";
  }
  return "S1";
}

inline ScenarioTag scenario_from_string(std::string_view s) {
  if (s == "S1" || s == "s1" || s == "1") return ScenarioTag::s1;
  if (s == "S2" || s == "s2" || s == "2") return ScenarioTag::s2;
  if (s == "S3" || s == "s3" || s == "3") return ScenarioTag::s3;
  throw Error(ErrorCode::invalid_argument, "unknown scenario '" + std::string(s) + "'");
}

/// Gaussian law of the coefficient vector.
struct CoefficientModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline CoefficientModel s1_coefficients() {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(3, 3, 0.6);
  cov.diagonal().setOnes();
  return {Eigen::VectorXd::Zero(3), cov};
}

/// Independent spline coefficients with sd 0.03, except the 7th with sd `sd7`.
inline CoefficientModel s2_coefficients(double sd7 = 0.003) {
  Eigen::VectorXd var = Eigen::VectorXd::Constant(13, 0.03 * 0.03);
  var(6) = sd7 * sd7;
  return {Eigen::VectorXd::Zero(13), var.asDiagonal()};
}

inline constexpr double s3_outlier_sd7 = 0.3;

struct ScenarioConfig {
  ScenarioTag scenario = ScenarioTag::s1;
  std::size_t n = 198;
  double beta = 0.06;
  GridPtr grid = make_uniform_grid(0.0, 1.0, 101);
  std::uint64_t seed = 1;
  /// Replaces the default coefficient law (S3 keeps its outlier component).
  std::optional<CoefficientModel> coefficients;
};

class ScenarioGenerator {
 public:
  explicit ScenarioGenerator(const ScenarioConfig& config)
      : tag_(config.scenario), beta_(config.beta), grid_(config.grid),
        regular_(make_mvn(config)),
        outlier_(Eigen::VectorXd::Zero(13), s2_coefficients(s3_outlier_sd7).covariance) {
    if (!(beta_ >= 0.0 && beta_ <= 1.0)) throw Error(ErrorCode::invalid_argument, "beta must lie in [0, 1]");
    if (regular_.dimension() != (tag_ == ScenarioTag::s1 ? 3 : 13)) {
      throw Error(ErrorCode::invalid_argument, "coefficient law has the wrong dimension for this scenario");
    }
    const std::size_t p = grid_->size();
    if (tag_ == ScenarioTag::s1) {
      cos_.resize(p);
      sin_.resize(p);
      for (std::size_t i = 0; i < p; ++i) {
        cos_[i] = std::cos(6.0 * std::numbers::pi * (*grid_)[i]);
        sin_[i] = std::sin(6.0 * std::numbers::pi * (*grid_)[i]);
      }
    } else {
      if (grid_->a() < 0.0 || grid_->b() > 1.0) {
        throw Error(ErrorCode::out_of_domain, "spline scenarios live on [0, 1]");
      }
      const BSplineBasis basis(4, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
      basis_.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(basis.size()));
      for (std::size_t i = 0; i < p; ++i) {
        const auto row = basis((*grid_)[i]);
        for (std::size_t j = 0; j < row.size(); ++j) {
          basis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
      }
    }
  }

  const GridPtr& grid() const noexcept { return grid_; }

  /// One curve, plus whether it came from the contaminating component.
  std::pair<Curve, bool> draw_labeled(Engine& rng) const {
    const std::size_t p = grid_->size();
    std::vector<double> v(p);
    if (tag_ == ScenarioTag::s1) {
      const Eigen::VectorXd x = regular_(rng);
      const double u = std::uniform_real_distribution<double>(-1.0 / 6.0, 1.0 / 6.0)(rng);
      // cos(6pi(t+u)) and sin(6pi(t+u)) expanded with the angle-sum identities.
      const double cu = std::cos(6.0 * std::numbers::pi * u);
      const double su = std::sin(6.0 * std::numbers::pi * u);
      const double a = x(1) * cu + x(2) * su;
      const double b = x(2) * cu - x(1) * su;
      for (std::size_t i = 0; i < p; ++i) v[i] = x(0) + a * cos_[i] + b * sin_[i];
      return {Curve(grid_, std::move(v)), false};
    }
    bool outlier = false;
    if (tag_ == ScenarioTag::s3) outlier = uniform01(rng) < beta_;
    const Eigen::VectorXd c = outlier ? outlier_(rng) : regular_(rng);
    Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(p)) = basis_ * c;
    return {Curve(grid_, std::move(v)), outlier};
  }

  Curve draw(Engine& rng) const { return draw_labeled(rng).first; }

  FunctionalSample draw_sample(std::size_t n, Engine& rng) const {
    FunctionalSample s(grid_);
    for (std::size_t i = 0; i < n; ++i) s.push_back(draw(rng));
    return s;
  }

 private:
  static MultivariateNormal make_mvn(const ScenarioConfig& config) {
    if (config.coefficients) return {config.coefficients->mean, config.coefficients->covariance};
    const CoefficientModel m = config.scenario == ScenarioTag::s1 ? s1_coefficients() : s2_coefficients();
    return {m.mean, m.covariance};
  }

  ScenarioTag tag_;
  double beta_;
  GridPtr grid_;
  MultivariateNormal regular_;
  MultivariateNormal outlier_;
  std::vector<double> cos_, sin_;
  Eigen::MatrixXd basis_;
};

/// n curves of the configured scenario drawn from the stream seeded by config.seed.
inline FunctionalSample gen_scenario(const ScenarioConfig& config) {
  if (config.n < 1) throw Error(ErrorCode::empty_sample, "scenario needs n >= 1");
  Engine rng = make_engine(config.seed);
  return ScenarioGenerator(config).draw_sample(config.n, rng);
}

}  // namespace confband
