#pragma once

#include "ospline/iwp.hpp"

namespace ospline {

/// h-units predictive SD of an order-p IWP:
///   sigma(h) = SD[g(x+h) | g(x), g'(x), ..., g^{(p-1)}(x)]
///            = sigma * sqrt(h^{2p-1}) / (sqrt(2p-1) (p-1)!),
/// independent of x.
struct PSDSpec {
  double h = 1.0;
  int order = 1;

  PSDSpec() = default;
  PSDSpec(double step, int p);

  /// sigma / sigma(h) = (p-1)! sqrt((2p-1) / h^{2p-1}).
  double conversion_factor() const;
};

enum class PriorTarget { sigma, psd };

/// Exponential prior P(X > x) = exp(-rate x) on an SD-scale parameter.
struct ExponentialPrior {
  double rate = 1.0;
  PriorTarget target = PriorTarget::sigma;

  ExponentialPrior() = default;
  ExponentialPrior(double r, PriorTarget on = PriorTarget::sigma);

  /// Exponential with P(X > u) = alpha.
  static ExponentialPrior from_tail(double u, double alpha, PriorTarget on = PriorTarget::sigma);
  static ExponentialPrior from_median(double median, PriorTarget on = PriorTarget::sigma);

  double log_density(double x) const;
  double tail_probability(double x) const;
  double median() const;
};

double sigma_to_psd(const PSDSpec& spec, double sigma);
double psd_to_sigma(const PSDSpec& spec, double psd);

/// Exponential prior on sigma such that P(sigma(h) > u) = alpha.
ExponentialPrior prior_from_psd(const PSDSpec& spec, double u, double alpha);

/// Conditional SD of g(x+h) given g and its first p-1 derivatives at x,
/// obtained by Gaussian conditioning of the exact joint covariance (IWP part
/// plus independent unit-variance polynomial coefficients, which do not affect
/// the result). Carried out in 50-digit arithmetic because the Schur
/// complement cancels many orders of magnitude for small h.
double psd_conditional_check(const IWPKernel& kernel, double x, double h);

}  // namespace ospline
