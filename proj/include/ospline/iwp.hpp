#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ospline/basis.hpp"
#include "ospline/error.hpp"

namespace ospline {

/// Covariance of sigma * W_p, the p-fold integrated Wiener process started
/// at zero with all derivatives below p pinned to zero there.
struct IWPKernel {
  int order = 1;
  double sigma = 1.0;

  IWPKernel() = default;
  IWPKernel(int p, double sd);
};

/// Cov[W_p^{(q1)}(s), W_p^{(q2)}(t)] scaled by sigma^2, for s, t >= 0
/// measured from the process origin.
///
/// Equals sigma^2 int_0^{min(s,t)} (s-u)^a (t-u)^b / (a! b!) du with
/// a = p-q1-1 and b = p-q2-1. Writing s-u = (s-t) + (t-u) for s >= t and
/// expanding binomially leaves only non-negative terms, so the sum is free of
/// cancellation.
template <class Real>
Real iwp_cov(int p, const Real& sigma, Real s, Real t, int q1, int q2) {
  if (p < 1 || p > kMaxOrder) throw InvalidArgument("exact_cov: order out of range");
  if (q1 < 0 || q2 < 0 || q1 >= p || q2 >= p) {
    throw InvalidArgument("exact_cov: derivative orders must satisfy 0 <= q < p");
  }
  if (s < Real(0) || t < Real(0)) throw InvalidArgument("exact_cov: locations must be non-negative");
  int a = p - q1 - 1;
  int b = p - q2 - 1;
  if (s < t) {
    std::swap(s, t);
    std::swap(a, b);
  }
  const Real delta = s - t;
  Real total(0);
  for (int i = 0; i <= a; ++i) {
    Real term(1);
    for (int e = 0; e < a - i; ++e) term *= delta;
    for (int e = 0; e < i + b + 1; ++e) term *= t;
    term /= Real(factorial(i)) * Real(factorial(a - i)) * Real(factorial(b)) * Real(i + b + 1);
    total += term;
  }
  return sigma * sigma * total;
}

double exact_cov(const IWPKernel& kernel, double s, double t, int q1 = 0, int q2 = 0);

/// Covariance of the O-spline approximation sigma * sum_j w_j phi_j with
/// w_j ~ N(0, 1/d_j). s and t are absolute locations inside the basis region.
double ospline_cov(const OSplineBasis& basis, double sigma, double s, double t, int q1 = 0, int q2 = 0);

/// Covariances on a product grid.
struct CovGrid {
  std::vector<double> s_values;
  std::vector<double> t_values;
  Eigen::MatrixXd values;
  int q1 = 0;
  int q2 = 0;

  /// Symmetric PSD check used for matched grids: eigenvalues >= -tol * lambda_max.
  bool is_symmetric_psd(double rel_tol = 1e-8) const;
};

/// Exact grid. Locations are absolute; origin is subtracted before evaluation.
CovGrid exact_cov_grid(const IWPKernel& kernel, std::span<const double> s, std::span<const double> t, int q1, int q2,
                       double origin = 0.0);

/// O-spline grid via design matrices: Phi_q1(s) diag(1/d) Phi_q2(t)^T.
CovGrid ospline_cov_grid(const OSplineBasis& basis, double sigma, std::span<const double> s,
                         std::span<const double> t, int q1, int q2);

/// Regular grid of grid_density + 1 points spanning [a, b].
std::vector<double> regular_grid(double a, double b, int grid_density);

/// Sup over a regular (s, t) grid of |exact - O-spline| covariance with
/// sigma = 1 and equally spaced knots. grid_density must be >= 10 k.
double sup_cov_error(int p, int k, double region_start, double region_end, int grid_density, int q1 = 0,
                     int q2 = 0);

/// Writes rows s,t,q1,q2,exact,approx,abs_err for matching grids.
void write_cov_compare_csv(std::ostream& out, const CovGrid& exact, const CovGrid& approx);

}  // namespace ospline
