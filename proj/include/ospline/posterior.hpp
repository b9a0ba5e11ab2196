#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ospline/aghq.hpp"

namespace ospline {

enum class Transform {
  none,
  /// q = 0 reports exp(g); q = 1 reports g' exp(g).
  exp,
};

struct PosteriorCurve {
  std::vector<double> xs;
  int q = 0;
  Transform transform = Transform::none;
  double level = 0.95;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  /// One row per x, one column per posterior sample.
  Eigen::MatrixXd samples;
};

/// Sample paths of g^{(q)} (or a transform) at xs with pointwise equal-tailed
/// credible intervals (type-7 sample quantiles). Requires q < p; the exp
/// transform supports q = 0 and q = 1.
PosteriorCurve posterior_function(const PosteriorFit& fit, std::span<const double> xs, int q,
                                  Transform transform = Transform::none, double level = 0.95);

struct PosteriorMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Mixture mean and SD of rows * (core latent) under the quadrature mixture.
PosteriorMoments linear_moments(const PosteriorFit& fit, const Eigen::MatrixXd& rows);

/// Exact mean and SD of g^{(q)}(xs) under the quadrature mixture of
/// Gaussian approximations (no sampling).
PosteriorMoments posterior_moments(const PosteriorFit& fit, std::span<const double> xs, int q);

struct FixedEffectSummary {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Level of a sum-coded factor that is not a column of the design:
/// minus the sum of columns first .. first + count - 1.
struct DerivedEffect {
  std::string name;
  Eigen::Index first = 0;
  Eigen::Index count = 0;
};

/// Sample summaries of the fixed effects, followed by one row per derived
/// level.
FixedEffectSummary fixed_effect_summary(const PosteriorFit& fit, double level = 0.95,
                                        std::span<const DerivedEffect> derived = {});

/// Type-7 quantile of an unsorted sample.
double sample_quantile(std::vector<double> values, double prob);

}  // namespace ospline
