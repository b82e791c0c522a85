#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <random>

#include "confband/error.hpp"
#include "confband/rng.hpp"

namespace confband {

/// Gaussian vector sampler for a positive semi-definite covariance:
/// mean + F z with F F^T = covariance from a pivoted LDL^T factorization.
class MultivariateNormal {
 public:
  MultivariateNormal(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance) : mean_(std::move(mean)) {
    const Eigen::Index d = mean_.size();
    if (covariance.rows() != d || covariance.cols() != d) {
      throw Error(ErrorCode::invalid_argument, "covariance shape does not match the mean");
    }
    if (!covariance.isApprox(covariance.transpose(), 1e-12) && covariance.norm() > 0.0) {
      throw Error(ErrorCode::not_psd, "covariance is not symmetric");
    }
    const double scale = std::max(1.0, covariance.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::not_psd, "covariance factorization failed");
    Eigen::VectorXd diag = ldlt.vectorD();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (diag(i) < -1e-10 * scale) throw Error(ErrorCode::not_psd, "covariance is not positive semi-definite");
      diag(i) = std::sqrt(std::max(diag(i), 0.0));
    }
    Eigen::MatrixXd lower = ldlt.matrixL();
    factor_ = ldlt.transpositionsP().transpose() * (lower * diag.asDiagonal());
  }

  Eigen::Index dimension() const noexcept { return mean_.size(); }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }

  Eigen::VectorXd operator()(Engine& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return mean_ + factor_ * z;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

inline Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Engine& rng) {
  return MultivariateNormal(mean, covariance)(rng);
}

}  // namespace confband
