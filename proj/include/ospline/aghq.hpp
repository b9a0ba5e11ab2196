#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ospline/laplace.hpp"
#include "ospline/model.hpp"

namespace ospline {

struct AghqOptions {
  int num_quad = 10;
  int samples = 3000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Finite-difference step on the log scale for the theta gradient/Hessian.
  double fd_step = 1e-3;
  /// Compute the condition number of H at every quadrature point.
  bool condition_numbers = true;
};

struct QuadPoint {
  Eigen::VectorXd theta;
  Hyper hyper;
  double log_laplace = 0.0;
  /// Normalized weight; the weights of a fit sum to one.
  double weight = 0.0;
  GaussianApprox approx;
  double condition = std::numeric_limits<double>::quiet_NaN();
};

/// Mixture-of-Gaussians posterior over the latent field.
struct PosteriorFit {
  std::shared_ptr<const SmoothPrior> smooth;
  LatentLayout layout;
  Family family = Family::gaussian;
  std::vector<std::string> fixed_names;
  std::vector<std::string> theta_names;

  std::vector<QuadPoint> points;
  Eigen::VectorXd theta_mode;
  /// Negative Hessian of the log Laplace marginal at theta_mode.
  Eigen::MatrixXd theta_hessian;
  /// Quadrature estimate of log pi(y).
  double log_evidence = 0.0;
  int optimizer_iterations = 0;
  int num_quad = 0;

  /// Core latent draws (spline, polynomial, fixed), one column per sample.
  Eigen::MatrixXd samples;
  /// Quadrature point that produced each sample column.
  std::vector<int> sample_point;
  std::uint64_t seed = 0;

  int order() const { return smooth->order(); }
  double origin() const { return smooth->region_start(); }
};

/// Maximizes the Laplace marginal over theta (log scale), builds the
/// adapted Gauss-Hermite grid, weights and samples. An even num_quad leaves
/// the mode off the grid, which is allowed.
PosteriorFit aghq_fit(const LatentModel& model, const AghqOptions& options = {});

/// Single point at fixed hyperparameters (weight one).
PosteriorFit fixed_hyper_fit(const LatentModel& model, const Hyper& hyper, int samples, std::uint64_t seed);

/// Largest condition number over the quadrature points.
double max_condition_number(const PosteriorFit& fit);

/// Mixture moments of theta on the original scale: E[sigma], E[family_sd].
Hyper posterior_hyper_mean(const PosteriorFit& fit);

}  // namespace ospline
