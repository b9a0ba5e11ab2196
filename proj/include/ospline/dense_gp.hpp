#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ospline/iwp.hpp"

namespace ospline {

/// Location plus derivative order at which to predict g^{(q)}(x).
struct PredictionPoint {
  double x = 0.0;
  int q = 0;
};

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Cross-covariance of the smooth (non-polynomial) part between
/// derivative q1 at x1 and derivative q2 at x2, locations absolute.
using CrossCovariance = std::function<double(double x1, int q1, double x2, int q2)>;

/// Dense Gaussian-process regression of y = g(x) + N(0, noise_sd^2) with
/// g = sum_l gamma_l (x - origin)^l + smooth part, gamma_l ~ N(0, tau_l^2).
/// Conditioning is done on the full n x n covariance; O(n^3).
GpPrediction dense_gp_fit(const CrossCovariance& cov, double origin, std::span<const double> xs,
                          std::span<const double> ys, double noise_sd, std::span<const double> poly_prior_sd,
                          std::span<const PredictionPoint> predict_at);

/// Exact IWP regression: dense_gp_fit with the closed-form IWP covariance.
/// poly_prior_sd must have p entries. Cholesky failure raises NumericError
/// quoting the condition number of the observation covariance.
GpPrediction exact_gp_fit(const IWPKernel& kernel, std::span<const double> xs, std::span<const double> ys,
                          double noise_sd, std::span<const double> poly_prior_sd,
                          std::span<const PredictionPoint> predict_at, double origin = 0.0);

}  // namespace ospline
