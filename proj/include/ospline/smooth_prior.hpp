#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ospline/basis.hpp"

namespace ospline {

/// Unit-sigma prior precision of the smooth-term weights. Scaled by 1/sigma^2
/// at fit time. Either diagonal (dense is empty) or a full matrix.
struct PrecisionBlock {
  Eigen::VectorXd diagonal;
  Eigen::MatrixXd dense;
  /// Optional R with dense = R^T R. When present, quadratic forms are
  /// evaluated as |R w|^2, which avoids cancellation in w^T (Q w).
  Eigen::MatrixXd root;
  double log_det = 0.0;

  /// w^T Q w.
  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& w) const;
  /// Q w.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& w) const;

  bool is_diagonal() const { return dense.size() == 0; }
  Eigen::Index dim() const { return is_diagonal() ? diagonal.size() : dense.rows(); }
};

/// Gaussian prior for the smooth term sigma * W_p of g, expressed through a
/// finite weight vector w ~ N(0, sigma^2 Q^{-1}) and a linear map from w to
/// W_p^{(q)} at arbitrary locations.
class SmoothPrior {
 public:
  virtual ~SmoothPrior() = default;

  virtual int order() const = 0;
  virtual double region_start() const = 0;
  virtual double region_end() const = 0;
  virtual const PrecisionBlock& precision() const = 0;
  virtual std::string name() const = 0;

  /// Rows map the weights to sigma W^{(q)}(x) for each x.
  virtual Eigen::MatrixXd design(std::span<const double> xs, int q) const = 0;

  /// Unit-sigma covariance of the part of W^{(q)}(xs) not determined by the
  /// weights. nullopt when the weights determine the path exactly.
  virtual std::optional<Eigen::MatrixXd> residual_covariance(std::span<const double> xs, int q) const;

  /// Unit-sigma covariance of W(xs) when it is available in closed form.
  /// Lets Gaussian fits evaluate log-determinants in observation space.
  virtual std::optional<Eigen::MatrixXd> covariance(std::span<const double> xs) const;
  /// Unit-sigma Cov(weights, W(xs)), dim x n, under the same condition.
  virtual std::optional<Eigen::MatrixXd> cross_covariance(std::span<const double> xs) const;

  Eigen::Index dim() const { return precision().dim(); }
};

/// O-spline weights: design from the basis, diagonal precision diag(d_j).
class OSplinePrior final : public SmoothPrior {
 public:
  explicit OSplinePrior(OSplineBasis basis);

  int order() const override { return basis_.order(); }
  double region_start() const override { return basis_.knots().region_start(); }
  double region_end() const override { return basis_.knots().region_end(); }
  const PrecisionBlock& precision() const override { return precision_; }
  std::string name() const override;
  Eigen::MatrixXd design(std::span<const double> xs, int q) const override;

  const OSplineBasis& basis() const { return basis_; }

 private:
  OSplineBasis basis_;
  PrecisionBlock precision_;
};

/// Exact IWP in augmented state form: the weights are
/// (W(x_i), W'(x_i), ..., W^{(p-1)}(x_i)) at each support location x_i > origin.
/// The state is Markov, so the dense precision is assembled from the
/// transition s_i = T(h) s_{i-1} + e_i, e_i ~ N(0, S(h)), between neighbours.
/// Predictions off the support come from the bridge between the two
/// neighbouring states (or the last state, beyond the support).
class ExactIWPPrior final : public SmoothPrior {
 public:
  /// support: distinct locations; points equal to the origin are dropped
  /// because the state is identically zero there.
  ExactIWPPrior(int order, double origin, double region_end, std::vector<double> support);

  int order() const override { return order_; }
  double region_start() const override { return origin_; }
  double region_end() const override { return region_end_; }
  const PrecisionBlock& precision() const override { return precision_; }
  std::string name() const override;
  Eigen::MatrixXd design(std::span<const double> xs, int q) const override;
  std::optional<Eigen::MatrixXd> residual_covariance(std::span<const double> xs, int q) const override;
  std::optional<Eigen::MatrixXd> covariance(std::span<const double> xs) const override;
  std::optional<Eigen::MatrixXd> cross_covariance(std::span<const double> xs) const override;

  std::span<const double> support() const { return support_; }

 private:
  // Index of the support point equal to x, or -1.
  Eigen::Index match(double x) const;
  // Number of support points strictly below x.
  Eigen::Index gap_of(double x) const;
  // Location of support point i, with i = -1 meaning the origin.
  double left_point(Eigen::Index gap) const;

  int order_;
  double origin_;
  double region_end_;
  std::vector<double> support_;
  PrecisionBlock precision_;
};

}  // namespace ospline
