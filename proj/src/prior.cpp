#include "ospline/prior.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ospline/error.hpp"

namespace ospline {

namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

Wide monomial_derivative(const Wide& x, int l, int q) {
  if (l < q) return Wide(0);
  Wide v = Wide(factorial(l)) / Wide(factorial(l - q));
  for (int i = 0; i < l - q; ++i) v *= x;
  return v;
}

}  // namespace

PSDSpec::PSDSpec(double step, int p) : h(step), order(p) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("PSDSpec: h must be positive and finite");
  if (p < 1 || p > kMaxOrder) throw InvalidArgument("PSDSpec: order out of range");
}

double PSDSpec::conversion_factor() const {
  const double c = factorial(order - 1) * std::sqrt((2.0 * order - 1.0) / std::pow(h, 2 * order - 1));
  if (!std::isfinite(c) || !(c > 0.0)) throw NumericError("PSDSpec: conversion factor is not finite");
  return c;
}

ExponentialPrior::ExponentialPrior(double r, PriorTarget on) : rate(r), target(on) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("ExponentialPrior: rate must be positive");
}

ExponentialPrior ExponentialPrior::from_tail(double u, double alpha, PriorTarget on) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("exponential prior: alpha must lie in (0, 1)");
  if (!(u > 0.0) || !std::isfinite(u)) throw InvalidArgument("exponential prior: u must be positive");
  return ExponentialPrior(-std::log(alpha) / u, on);
}

ExponentialPrior ExponentialPrior::from_median(double median, PriorTarget on) {
  return from_tail(median, 0.5, on);
}

double ExponentialPrior::log_density(double x) const {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(rate) - rate * x;
}

double ExponentialPrior::tail_probability(double x) const { return x <= 0.0 ? 1.0 : std::exp(-rate * x); }

double ExponentialPrior::median() const { return std::log(2.0) / rate; }

double sigma_to_psd(const PSDSpec& spec, double sigma) {
  if (sigma < 0.0) throw InvalidArgument("sigma_to_psd: sigma must be >= 0");
  return sigma / spec.conversion_factor();
}

double psd_to_sigma(const PSDSpec& spec, double psd) {
  if (psd < 0.0) throw InvalidArgument("psd_to_sigma: psd must be >= 0");
  return psd * spec.conversion_factor();
}

ExponentialPrior prior_from_psd(const PSDSpec& spec, double u, double alpha) {
  const ExponentialPrior on_psd = ExponentialPrior::from_tail(u, alpha, PriorTarget::psd);
  // sigma = c * sigma(h), so an Exp(lambda) on sigma(h) is Exp(lambda / c) on sigma.
  return ExponentialPrior(on_psd.rate / spec.conversion_factor(), PriorTarget::sigma);
}

double psd_conditional_check(const IWPKernel& kernel, double x, double h) {
  if (x < 0.0) throw InvalidArgument("psd_conditional_check: x must be >= 0");
  if (!(h > 0.0)) throw InvalidArgument("psd_conditional_check: h must be positive");
  const int p = kernel.order;
  const Wide sigma(kernel.sigma);
  const Wide x0(x);
  const Wide x1 = x0 + Wide(h);

  // Variable 0 is g(x+h); variables 1..p are g^{(j)}(x), j = 0..p-1.
  struct Var {
    Wide loc;
    int q;
  };
  std::vector<Var> vars;
  vars.push_back({x1, 0});
  for (int j = 0; j < p; ++j) vars.push_back({x0, j});
  const int dim = p + 1;
  std::vector<Wide> cov(static_cast<std::size_t>(dim * dim));
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      Wide c = iwp_cov<Wide>(p, sigma, vars[a].loc, vars[b].loc, vars[a].q, vars[b].q);
      for (int l = 0; l < p; ++l) {
        c += monomial_derivative(vars[a].loc, l, vars[a].q) * monomial_derivative(vars[b].loc, l, vars[b].q);
      }
      cov[static_cast<std::size_t>(a * dim + b)] = c;
    }
  }

  // Cholesky of the conditioning block (indices 1..p), then the Schur complement.
  std::vector<Wide> chol(static_cast<std::size_t>(p * p), Wide(0));
  auto m = [&](int a, int b) -> const Wide& { return cov[static_cast<std::size_t>((a + 1) * dim + (b + 1))]; };
  for (int j = 0; j < p; ++j) {
    Wide diag = m(j, j);
    for (int k = 0; k < j; ++k) diag -= chol[j * p + k] * chol[j * p + k];
    if (!(diag > Wide(0))) {
      throw NumericError("psd_conditional_check: conditioning covariance is singular (pivot " + std::to_string(j) +
                         ")");
    }
    chol[j * p + j] = boost::multiprecision::sqrt(diag);
    for (int i = j + 1; i < p; ++i) {
      Wide v = m(i, j);
      for (int k = 0; k < j; ++k) v -= chol[i * p + k] * chol[j * p + k];
      chol[i * p + j] = v / chol[j * p + j];
    }
  }
  // Forward solve L z = c where c = Cov(g(x+h), conditioning vars).
  std::vector<Wide> z(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    Wide v = cov[static_cast<std::size_t>(i + 1)];
    for (int k = 0; k < i; ++k) v -= chol[i * p + k] * z[k];
    z[i] = v / chol[i * p + i];
  }
  Wide var = cov[0];
  for (const auto& zi : z) var -= zi * zi;
  if (var < Wide(0)) throw NumericError("psd_conditional_check: negative conditional variance");
  return static_cast<double>(boost::multiprecision::sqrt(var));
}

}  // namespace ospline
