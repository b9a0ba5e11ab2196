#pragma once

#include <Eigen/Dense>

#include "ospline/model.hpp"

namespace ospline {

/// Gaussian approximation of the latent field at its conditional mode.
///
/// The negative Hessian is H = [[A, C^T], [C, diag(D)]] where the second block
/// only exists for observation-level effects (overdispersed Poisson). The
/// factor holds the Cholesky of the core Schur complement S = A - C^T D^{-1} C,
/// which equals A when there are no observation-level effects.
struct GaussianApprox {
  Eigen::VectorXd mode;
  Eigen::MatrixXd core_block;
  Eigen::MatrixXd coupling;
  Eigen::VectorXd od_diagonal;
  Eigen::LLT<Eigen::MatrixXd> factor;
  double log_det = 0.0;
  double log_joint = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;

  Eigen::Index dim() const { return mode.size(); }
  Eigen::Index core_dim() const { return core_block.rows(); }
  Eigen::MatrixXd precision() const;
  /// Marginal covariance of the core latent block, S^{-1}.
  Eigen::MatrixXd core_covariance() const;
};

struct NewtonOptions {
  int max_iter = 100;
  double tol = 1e-8;
};

/// Negative Hessian of log_joint with respect to the latent vector.
Eigen::MatrixXd assemble_precision(const LatentModel& model, const Eigen::VectorXd& latent, const Hyper& hyper);

/// Newton iterations with step halving on log_joint. Stops when
/// |grad| <= tol (1 + |log_joint|), or when the Newton decrement shows the
/// remaining gradient is round-off. Throws IterationError after max_iter and
/// NumericError when the Hessian is not positive definite.
///
/// Gaussian models whose smooth prior has a closed-form covariance start from
/// the GP-conditioning mode and take log det H from the observation-space
/// covariance (init is ignored for them).
GaussianApprox newton_mode(const LatentModel& model, const Hyper& hyper, const Eigen::VectorXd* init = nullptr,
                           const NewtonOptions& options = {});

/// log pi(mode, theta, y) + dim/2 log 2 pi - 1/2 log det H.
double laplace_log_marginal(const GaussianApprox& approx);
double laplace_log_marginal(const LatentModel& model, const Hyper& hyper);

/// lambda_max / lambda_min of a symmetric positive definite matrix.
double condition_number(const Eigen::MatrixXd& precision);
double condition_number(const GaussianApprox& approx);

}  // namespace ospline
