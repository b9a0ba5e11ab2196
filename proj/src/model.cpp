#include "ospline/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ospline/error.hpp"

namespace ospline {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double default_sd() { return std::sqrt(1000.0); }

Eigen::VectorXd sd_vector(const std::vector<double>& given, Eigen::Index size, const char* what) {
  Eigen::VectorXd out(size);
  if (given.empty()) {
    out.setConstant(default_sd());
    return out;
  }
  if (static_cast<Eigen::Index>(given.size()) != size) {
    throw InvalidArgument(std::string("model: ") + what + " needs " + std::to_string(size) + " entries");
  }
  for (Eigen::Index i = 0; i < size; ++i) out(i) = given[static_cast<std::size_t>(i)];
  return out;
}

double normal_log_density(double x, double sd) { return -0.5 * kLog2Pi - std::log(sd) - 0.5 * (x / sd) * (x / sd); }

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::gaussian:
      return "gaussian";
    case Family::poisson:
      return "poisson";
    case Family::poisson_overdispersed:
      return "poisson-od";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  if (text == "gaussian") return Family::gaussian;
  if (text == "poisson") return Family::poisson;
  if (text == "poisson-od") return Family::poisson_overdispersed;
  throw InvalidArgument("unknown family '" + std::string(text) + "' (expected gaussian, poisson or poisson-od)");
}

void LatentModel::finalize() {
  if (!smooth) throw InvalidArgument("model: smooth prior missing");
  const Eigen::Index rows = n();
  if (rows == 0) throw InvalidArgument("model: no observations");
  if (!response.allFinite()) throw InvalidArgument("model: response contains non-finite values");
  if (spline_design.rows() != rows || poly_design.rows() != rows ||
      (fixed_design.size() > 0 && fixed_design.rows() != rows)) {
    throw InvalidArgument("model: every design block needs one row per observation");
  }
  if (fixed_design.size() == 0) fixed_design.resize(rows, 0);
  if (spline_design.cols() != smooth->dim()) throw InvalidArgument("model: spline design width does not match prior");
  if (poly_prior_sd.size() != poly_design.cols()) throw InvalidArgument("model: one polynomial prior SD per column");
  if (fixed_prior_sd.size() != fixed_design.cols()) throw InvalidArgument("model: one fixed-effect prior SD per column");
  if ((poly_prior_sd.array() <= 0.0).any() || (fixed_prior_sd.array() <= 0.0).any() || !poly_prior_sd.allFinite() ||
      !fixed_prior_sd.allFinite()) {
    throw InvalidArgument("model: prior SDs must be positive and finite");
  }
  if (!fixed_names.empty() && static_cast<Eigen::Index>(fixed_names.size()) != fixed_design.cols()) {
    throw InvalidArgument("model: fixed_names must match the fixed design width");
  }
  if (sigma_prior.target != PriorTarget::sigma) {
    throw InvalidArgument("model: sigma prior must be expressed on sigma (convert PSD priors first)");
  }
  if (family != Family::gaussian && noise_sd) throw InvalidArgument("model: noise_sd only applies to gaussian");
  if (family == Family::gaussian) {
    if (noise_sd && !(*noise_sd > 0.0 && std::isfinite(*noise_sd))) {
      throw InvalidArgument("model: noise_sd must be positive");
    }
    if (!noise_sd && !family_prior) throw InvalidArgument("model: gaussian family needs noise_sd or a prior on it");
  }
  if (family == Family::poisson && family_prior) throw InvalidArgument("model: poisson has no family hyperparameter");
  if (family == Family::poisson_overdispersed && !family_prior) {
    throw InvalidArgument("model: overdispersed poisson needs a prior on the overdispersion SD");
  }
  if (family != Family::gaussian) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double y = response(i);
      if (y < 0.0 || y != std::floor(y)) {
        throw InvalidArgument("model: poisson response must be non-negative integers (observation " +
                              std::to_string(i) + ")");
      }
    }
  }

  core_design_.resize(rows, spline_design.cols() + poly_design.cols() + fixed_design.cols());
  core_design_ << spline_design, poly_design, fixed_design;
  if (family == Family::gaussian) {
    gram_ = Eigen::MatrixXd::Zero(core_design_.cols(), core_design_.cols());
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(core_design_.transpose());
    gram_ = gram_.selfadjointView<Eigen::Lower>();
    design_response_ = core_design_.transpose() * response;
  }
  finalized_ = true;
}

LatentLayout LatentModel::layout() const {
  LatentLayout out;
  out.spline = spline_design.cols();
  out.poly = poly_design.cols();
  out.fixed = fixed_design.cols();
  out.od = family == Family::poisson_overdispersed ? n() : 0;
  return out;
}

const Eigen::MatrixXd& LatentModel::core_design() const {
  if (!finalized_) throw InvalidArgument("model: finalize() was not called");
  return core_design_;
}

const Eigen::MatrixXd& LatentModel::gram() const {
  if (!finalized_ || family != Family::gaussian) throw InvalidArgument("model: Gram matrix needs a finalized gaussian model");
  return gram_;
}

const Eigen::VectorXd& LatentModel::design_response() const {
  if (!finalized_ || family != Family::gaussian) throw InvalidArgument("model: X^T y needs a finalized gaussian model");
  return design_response_;
}

bool LatentModel::has_free_family_sd() const {
  return family == Family::poisson_overdispersed || (family == Family::gaussian && !noise_sd);
}

int LatentModel::theta_dim() const { return has_free_family_sd() ? 2 : 1; }

std::vector<std::string> LatentModel::theta_names() const {
  std::vector<std::string> out{"log_sigma"};
  if (family == Family::gaussian && !noise_sd) out.emplace_back("log_noise_sd");
  if (family == Family::poisson_overdispersed) out.emplace_back("log_overdispersion_sd");
  return out;
}

Hyper LatentModel::hyper_from_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_dim()) throw InvalidArgument("model: theta has the wrong dimension");
  Hyper h;
  h.sigma = std::exp(theta(0));
  if (has_free_family_sd()) h.family_sd = std::exp(theta(1));
  return h;
}

Eigen::VectorXd LatentModel::theta_from_hyper(const Hyper& hyper) const {
  Eigen::VectorXd theta(theta_dim());
  theta(0) = std::log(hyper.sigma);
  if (has_free_family_sd()) theta(1) = std::log(hyper.family_sd);
  return theta;
}

double LatentModel::gaussian_noise_sd(const Hyper& hyper) const {
  const double sd = noise_sd ? *noise_sd : hyper.family_sd;
  if (!(sd > 0.0) || !std::isfinite(sd)) throw NumericError("model: gaussian noise SD is not positive and finite");
  return sd;
}

void LatentModel::add_core_prior_precision(Eigen::MatrixXd& target, double sigma) const {
  const PrecisionBlock& prec = smooth->precision();
  const Eigen::Index m = prec.dim();
  const double scale = 1.0 / (sigma * sigma);
  if (prec.is_diagonal()) {
    target.diagonal().head(m) += scale * prec.diagonal;
  } else {
    target.topLeftCorner(m, m) += scale * prec.dense;
  }
  const Eigen::Index p = poly_prior_sd.size();
  target.diagonal().segment(m, p) += poly_prior_sd.array().square().inverse().matrix();
  const Eigen::Index r = fixed_prior_sd.size();
  target.diagonal().segment(m + p, r) += fixed_prior_sd.array().square().inverse().matrix();
}

LatentModel make_model(std::shared_ptr<const SmoothPrior> smooth, std::span<const double> xs,
                       std::span<const double> ys, Family family, const ModelOptions& options) {
  if (!smooth) throw InvalidArgument("make_model: smooth prior missing");
  if (xs.size() != ys.size()) throw InvalidArgument("make_model: x and y differ in length");
  const int p = smooth->order();
  LatentModel model;
  model.response = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  model.family = family;
  model.spline_design = smooth->design(xs, 0);
  std::vector<double> shifted(xs.begin(), xs.end());
  for (double& x : shifted) x -= smooth->region_start();
  model.poly_design = polynomial_design(shifted, p, 0);
  model.fixed_design = options.fixed_design;
  model.poly_prior_sd = sd_vector(options.poly_prior_sd, p, "poly_prior_sd");
  model.fixed_prior_sd = sd_vector(options.fixed_prior_sd, options.fixed_design.cols(), "fixed_prior_sd");
  model.fixed_names = options.fixed_names;
  model.sigma_prior = options.sigma_prior;
  model.noise_sd = options.noise_sd;
  model.family_prior = options.family_prior;
  if (auto cov = smooth->covariance(xs)) {
    if (auto cross = smooth->cross_covariance(xs)) {
      model.smooth_covariance = std::move(*cov);
      model.smooth_cross_covariance = std::move(*cross);
    }
  }
  model.smooth = std::move(smooth);
  model.finalize();
  return model;
}

LatentModel make_ospline_model(int order, std::size_t knots, double region_start, double region_end,
                               std::span<const double> xs, std::span<const double> ys, Family family,
                               const ModelOptions& options) {
  auto prior = std::make_shared<OSplinePrior>(
      OSplineBasis(order, KnotSet::equally_spaced(region_start, region_end, knots)));
  return make_model(std::move(prior), xs, ys, family, options);
}

LatentModel make_exact_model(int order, double region_start, double region_end, std::span<const double> xs,
                             std::span<const double> ys, Family family, const ModelOptions& options) {
  auto prior = std::make_shared<ExactIWPPrior>(order, region_start, region_end,
                                               std::vector<double>(xs.begin(), xs.end()));
  return make_model(std::move(prior), xs, ys, family, options);
}

LikelihoodTerms likelihood_terms(const LatentModel& model, const Eigen::VectorXd& eta, const Hyper& hyper) {
  const Eigen::Index n = model.n();
  if (eta.size() != n) throw InvalidArgument("likelihood_terms: eta has the wrong length");
  LikelihoodTerms out;
  out.gradient.resize(n);
  out.curvature.resize(n);
  if (model.family == Family::gaussian) {
    const double sd = model.gaussian_noise_sd(hyper);
    const double prec = 1.0 / (sd * sd);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = model.response(i) - eta(i);
      if (!std::isfinite(r)) throw NumericError("likelihood: non-finite residual at observation " + std::to_string(i));
      out.value += normal_log_density(r, sd);
      out.gradient(i) = r * prec;
      out.curvature(i) = prec;
    }
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = model.response(i);
    const double rate = std::exp(eta(i));
    if (!std::isfinite(rate) || !std::isfinite(eta(i))) {
      std::ostringstream msg;
      msg << "likelihood: poisson rate overflow at observation " << i + 1 << " (eta = " << eta(i) << ")";
      throw NumericError(msg.str());
    }
    out.value += y * eta(i) - rate - std::lgamma(y + 1.0);
    out.gradient(i) = y - rate;
    out.curvature(i) = rate;
  }
  return out;
}

double log_hyperprior(const LatentModel& model, const Hyper& hyper) {
  if (!(hyper.sigma > 0.0)) throw InvalidArgument("log_hyperprior: sigma must be positive");
  double total = model.sigma_prior.log_density(hyper.sigma) + std::log(hyper.sigma);
  if (model.has_free_family_sd()) {
    if (!(hyper.family_sd > 0.0)) throw InvalidArgument("log_hyperprior: family SD must be positive");
    total += model.family_prior->log_density(hyper.family_sd) + std::log(hyper.family_sd);
  }
  return total;
}

Eigen::VectorXd linear_predictor(const LatentModel& model, const Eigen::VectorXd& latent) {
  const LatentLayout lay = model.layout();
  if (latent.size() != lay.total()) throw InvalidArgument("linear_predictor: latent has the wrong length");
  Eigen::VectorXd eta = model.core_design() * latent.head(lay.core());
  if (lay.od > 0) eta += latent.tail(lay.od);
  return eta;
}

double log_joint(const LatentModel& model, const Eigen::VectorXd& latent, const Hyper& hyper) {
  const LatentLayout lay = model.layout();
  if (latent.size() != lay.total()) throw InvalidArgument("log_joint: latent has the wrong length");
  const PrecisionBlock& prec = model.smooth->precision();
  const double sigma = hyper.sigma;
  if (!(sigma > 0.0)) throw InvalidArgument("log_joint: sigma must be positive");

  const auto w = latent.head(lay.spline);
  const double quad = prec.quadratic(w);
  const auto m = static_cast<double>(lay.spline);
  double total = -0.5 * m * kLog2Pi + 0.5 * prec.log_det - m * std::log(sigma) - 0.5 * quad / (sigma * sigma);
  for (Eigen::Index l = 0; l < lay.poly; ++l) total += normal_log_density(latent(lay.spline + l), model.poly_prior_sd(l));
  for (Eigen::Index r = 0; r < lay.fixed; ++r) {
    total += normal_log_density(latent(lay.spline + lay.poly + r), model.fixed_prior_sd(r));
  }
  if (lay.od > 0) {
    const double phi = hyper.family_sd;
    if (!(phi > 0.0)) throw InvalidArgument("log_joint: overdispersion SD must be positive");
    for (Eigen::Index i = 0; i < lay.od; ++i) total += normal_log_density(latent(lay.core() + i), phi);
  }
  total += likelihood_terms(model, linear_predictor(model, latent), hyper).value;
  total += log_hyperprior(model, hyper);
  return total;
}

Eigen::MatrixXd sum_coded_design(std::span<const std::string> values, std::vector<std::string>* level_names) {
  std::vector<std::string> levels;
  for (const auto& v : values) {
    if (std::find(levels.begin(), levels.end(), v) == levels.end()) levels.push_back(v);
  }
  if (levels.size() < 2) throw InvalidArgument("sum_coded_design: a categorical column needs at least two levels");
  const auto cols = static_cast<Eigen::Index>(levels.size() - 1);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()), cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto level = std::find(levels.begin(), levels.end(), values[i]) - levels.begin();
    if (level == cols) {
      out.row(static_cast<Eigen::Index>(i)).setConstant(-1.0);
    } else {
      out(static_cast<Eigen::Index>(i), level) = 1.0;
    }
  }
  if (level_names) *level_names = levels;
  return out;
}

}  // namespace ospline
