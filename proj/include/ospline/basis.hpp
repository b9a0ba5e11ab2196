#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "ospline/knots.hpp"

namespace ospline {

/// Highest supported integration order.
inline constexpr int kMaxOrder = 20;

/// n! for n = 0..kMaxOrder.
double factorial(int n);

/// Evaluated basis functions (or one of their derivatives) at a set of
/// locations. values(i, j) is the q-th derivative of basis j at x_i.
struct DesignBlock {
  Eigen::MatrixXd values;
  int derivative_order = 0;
  int source_order = 0;
};

/// Overlapping-spline basis of order p: basis j is the p-fold integral
/// (from region_start) of the test function of cell j, so
///
///   phi_j(x) = 0                                        x <= s_{j-1}
///            = (x - s_{j-1})^p / p!                     s_{j-1} < x <= s_j
///            = sum_{i=1}^p d_j^i (x - s_j)^{p-i} / (i! (p-i)!)   x > s_j
///
/// The q-th derivative of an order-p basis is the order-(p-q) basis on the
/// same knots; q = p gives the test function itself.
class OSplineBasis {
 public:
  OSplineBasis(int order, KnotSet knots);

  int order() const { return order_; }
  const KnotSet& knots() const { return knots_; }
  std::size_t size() const { return knots_.size(); }

  /// q-th derivative of basis j at x, 0 <= q <= p, x >= region_start.
  double eval(std::size_t j, double x, int q = 0) const;

  /// Fills out(j) for every basis j; out must have size() entries.
  void eval_all(double x, int q, std::span<double> out) const;

  /// n x k matrix of q-th derivatives at xs (q < p, xs inside the region).
  DesignBlock design(std::span<const double> xs, int q = 0) const;

  /// Diagonal of the weight precision: d_j for each cell.
  Eigen::VectorXd weight_precision() const;

 private:
  int order_;
  KnotSet knots_;
};

double basis_eval(const OSplineBasis& basis, std::size_t j, double x, int q);

DesignBlock design_matrix(const OSplineBasis& basis, std::span<const double> xs, int q);

/// Monomial design: entry (i, l) = d^q/dx^q [x^l] at xs_i for l = 0..p-1.
Eigen::MatrixXd polynomial_design(std::span<const double> xs, int p, int q);

/// Diagonal weight precision diag(d_1, ..., d_k).
Eigen::VectorXd weight_precision(const KnotSet& knots);

}  // namespace ospline
