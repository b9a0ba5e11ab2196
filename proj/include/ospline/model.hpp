#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ospline/prior.hpp"
#include "ospline/smooth_prior.hpp"

namespace ospline {

enum class Family { gaussian, poisson, poisson_overdispersed };

std::string family_name(Family family);
/// Accepts "gaussian", "poisson", "poisson-od".
Family parse_family(std::string_view text);

/// Hyperparameters. family_sd is the Gaussian noise SD when it is not fixed,
/// or the overdispersion SD for poisson_overdispersed; NaN otherwise.
struct Hyper {
  double sigma = 1.0;
  double family_sd = std::numeric_limits<double>::quiet_NaN();
};

/// Latent vector layout: [spline weights | polynomial coefficients |
/// fixed effects | observation-level effects (overdispersed Poisson only)].
struct LatentLayout {
  Eigen::Index spline = 0;
  Eigen::Index poly = 0;
  Eigen::Index fixed = 0;
  Eigen::Index od = 0;

  Eigen::Index core() const { return spline + poly + fixed; }
  Eigen::Index total() const { return core() + od; }
};

/// eta = Phi w + P gamma + V beta (+ eps), response y | eta from the family.
struct LatentModel {
  Eigen::VectorXd response;
  Family family = Family::gaussian;
  std::shared_ptr<const SmoothPrior> smooth;
  Eigen::MatrixXd spline_design;
  Eigen::MatrixXd poly_design;
  Eigen::MatrixXd fixed_design;
  Eigen::VectorXd poly_prior_sd;
  Eigen::VectorXd fixed_prior_sd;
  std::vector<std::string> fixed_names;
  ExponentialPrior sigma_prior;
  std::optional<double> noise_sd;
  std::optional<ExponentialPrior> family_prior;
  /// Unit-sigma covariance of the smooth term at the observations, when the
  /// prior provides it in closed form (empty otherwise).
  Eigen::MatrixXd smooth_covariance;
  /// Unit-sigma Cov(spline weights, smooth term at the observations), same
  /// availability as smooth_covariance.
  Eigen::MatrixXd smooth_cross_covariance;

  /// Checks shapes and priors and caches the stacked design [Phi P V] (and
  /// its Gram matrix for the Gaussian family). Must be called after the
  /// fields are set; the factory functions do it.
  void finalize();

  Eigen::Index n() const { return response.size(); }
  LatentLayout layout() const;
  const Eigen::MatrixXd& core_design() const;
  /// X^T X and X^T y for the stacked design; Gaussian family only.
  const Eigen::MatrixXd& gram() const;
  const Eigen::VectorXd& design_response() const;

  /// 1 (sigma) plus one when the family carries a free SD.
  int theta_dim() const;
  bool has_free_family_sd() const;
  std::vector<std::string> theta_names() const;
  /// theta is (log sigma[, log family_sd]).
  Hyper hyper_from_theta(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd theta_from_hyper(const Hyper& hyper) const;
  /// Noise SD used by the Gaussian likelihood at these hyperparameters.
  double gaussian_noise_sd(const Hyper& hyper) const;
  /// Unit-sigma prior precision of the core latent block, sigma applied.
  void add_core_prior_precision(Eigen::MatrixXd& target, double sigma) const;

 private:
  Eigen::MatrixXd core_design_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd design_response_;
  bool finalized_ = false;
};

struct ModelOptions {
  ExponentialPrior sigma_prior;
  std::optional<double> noise_sd;
  std::optional<ExponentialPrior> family_prior;
  /// One SD per polynomial degree; empty means sqrt(1000) for each.
  std::vector<double> poly_prior_sd;
  /// n x r fixed-effect design, possibly with no columns.
  Eigen::MatrixXd fixed_design;
  /// One SD per fixed-effect column; empty means sqrt(1000) for each.
  std::vector<double> fixed_prior_sd;
  std::vector<std::string> fixed_names;
};

/// Builds a model whose smooth term uses the given prior; the polynomial
/// part is in powers of (x - region_start).
LatentModel make_model(std::shared_ptr<const SmoothPrior> smooth, std::span<const double> xs,
                       std::span<const double> ys, Family family, const ModelOptions& options);

/// O-spline model with equally spaced knots on [region_start, region_end].
LatentModel make_ospline_model(int order, std::size_t knots, double region_start, double region_end,
                               std::span<const double> xs, std::span<const double> ys, Family family,
                               const ModelOptions& options);

/// Dense exact-IWP model with the augmented state at the distinct xs.
LatentModel make_exact_model(int order, double region_start, double region_end, std::span<const double> xs,
                             std::span<const double> ys, Family family, const ModelOptions& options);

/// Likelihood log-density and its first two eta-derivatives.
struct LikelihoodTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;
  /// -d^2/deta^2, non-negative for the supported families.
  Eigen::VectorXd curvature;
};

/// Throws NumericError naming the observation when a term is not finite.
LikelihoodTerms likelihood_terms(const LatentModel& model, const Eigen::VectorXd& eta, const Hyper& hyper);

/// Log prior of the hyperparameters on the log scale, Jacobian included.
double log_hyperprior(const LatentModel& model, const Hyper& hyper);

/// log pi(latent, theta, y) with every normalizing constant included.
double log_joint(const LatentModel& model, const Eigen::VectorXd& latent, const Hyper& hyper);

/// Linear predictor for a full latent vector.
Eigen::VectorXd linear_predictor(const LatentModel& model, const Eigen::VectorXd& latent);

/// Sum-to-zero coding of a categorical column. Levels are ordered by first
/// appearance; the last level gets -1 in every column. level_names receives
/// all levels in order (the last is the derived one).
Eigen::MatrixXd sum_coded_design(std::span<const std::string> values, std::vector<std::string>* level_names);

}  // namespace ospline
