#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ospline {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration on [a, b], splitting first at
/// any breakpoints that fall strictly inside. Throws NumericError when the
/// error estimate cannot be pushed under abs_tol within max_depth bisections.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                    std::span<const double> breakpoints = {}, int max_depth = 40);

/// Repeated integration of a covariance function, as used for integrated
/// Gaussian processes: returns I_t^{steps_t} I_s^{steps_s} cov evaluated at
/// (s, t), where I_x^m integrates m times from 0 to x.
///
/// Each m-fold repeated integral is collapsed to one integral with the kernel
/// (x - u)^{m-1} / (m-1)!, leaving at most a 2-D adaptive quadrature. The inner
/// integral is split on the diagonal and at the supplied breakpoints.
double integrate_cov_oracle(const std::function<double(double, double)>& cov, double s, double t, int steps_s,
                            int steps_t, double abs_tol = 1e-9, std::span<const double> breakpoints = {});

/// Gauss-Hermite rule for the standard normal weight: sum_i w_i f(z_i)
/// approximates E[f(Z)], Z ~ N(0, 1). Weights sum to one.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussHermiteRule gauss_hermite(int n);

}  // namespace ospline
