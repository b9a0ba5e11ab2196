#include "ospline/laplace.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "ospline/error.hpp"

namespace ospline {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Point {
  Eigen::VectorXd latent;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd curvature;
};

Point evaluate(const LatentModel& model, const LatentLayout& lay, Eigen::VectorXd latent, const Hyper& hyper) {
  Point out;
  const Eigen::MatrixXd& x = model.core_design();
  const Eigen::VectorXd eta = linear_predictor(model, latent);
  LikelihoodTerms lik = likelihood_terms(model, eta, hyper);
  out.value = log_joint(model, latent, hyper);

  const PrecisionBlock& prec = model.smooth->precision();
  const double inv_s2 = 1.0 / (hyper.sigma * hyper.sigma);
  out.gradient.resize(lay.total());
  const auto w = latent.head(lay.spline);
  out.gradient.head(lay.spline) = -inv_s2 * prec.apply(w);
  out.gradient.segment(lay.spline, lay.poly) =
      -latent.segment(lay.spline, lay.poly).cwiseQuotient(model.poly_prior_sd.cwiseAbs2());
  out.gradient.segment(lay.spline + lay.poly, lay.fixed) =
      -latent.segment(lay.spline + lay.poly, lay.fixed).cwiseQuotient(model.fixed_prior_sd.cwiseAbs2());
  out.gradient.head(lay.core()) += x.transpose() * lik.gradient;
  if (lay.od > 0) {
    const double phi = hyper.family_sd;
    out.gradient.tail(lay.od) = -latent.tail(lay.od) / (phi * phi) + lik.gradient;
  }
  out.curvature = std::move(lik.curvature);
  out.latent = std::move(latent);
  return out;
}

// Fills A, C, D and the core Schur complement for the curvature at a point.
void build_hessian(const LatentModel& model, const LatentLayout& lay, const Hyper& hyper, const Eigen::VectorXd& curv,
                   GaussianApprox& out, Eigen::MatrixXd& schur) {
  const Eigen::MatrixXd& x = model.core_design();
  const Eigen::Index core = lay.core();
  out.core_block = Eigen::MatrixXd::Zero(core, core);
  model.add_core_prior_precision(out.core_block, hyper.sigma);
  if (model.family == Family::gaussian) {
    out.core_block += curv(0) * model.gram();
    out.coupling.resize(0, 0);
    out.od_diagonal.resize(0);
    schur = out.core_block;
    return;
  }
  const Eigen::MatrixXd weighted = x.array().colwise() * curv.array().sqrt();
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(core, core);
  xtwx.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
  xtwx = xtwx.selfadjointView<Eigen::Lower>();
  out.core_block += xtwx;
  if (lay.od == 0) {
    out.coupling.resize(0, 0);
    out.od_diagonal.resize(0);
    schur = out.core_block;
    return;
  }
  const double phi2 = hyper.family_sd * hyper.family_sd;
  out.coupling = x.array().colwise() * curv.array();
  out.od_diagonal = (curv.array() + 1.0 / phi2).matrix();
  // S = prior + X^T diag(c / (1 + phi^2 c)) X.
  const Eigen::ArrayXd shrunk = curv.array() / (1.0 + phi2 * curv.array());
  const Eigen::MatrixXd scaled = x.array().colwise() * shrunk.sqrt();
  schur = Eigen::MatrixXd::Zero(core, core);
  model.add_core_prior_precision(schur, hyper.sigma);
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(core, core);
  tmp.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  schur += tmp.selfadjointView<Eigen::Lower>().toDenseMatrix();
}

// Observation-space view of a Gaussian fit with a closed-form smooth
// covariance: Cov(y) = sigma^2 K + P T P^T + V O V^T + s^2 I.
struct ObservationSpace {
  Eigen::LLT<Eigen::MatrixXd> factor;
  double noise = 1.0;
};

ObservationSpace observation_space(const LatentModel& model, const Hyper& hyper) {
  ObservationSpace out;
  out.noise = model.gaussian_noise_sd(hyper);
  Eigen::MatrixXd cov = (hyper.sigma * hyper.sigma) * model.smooth_covariance;
  cov += model.poly_design * model.poly_prior_sd.cwiseAbs2().asDiagonal() * model.poly_design.transpose();
  if (model.fixed_design.cols() > 0) {
    cov += model.fixed_design * model.fixed_prior_sd.cwiseAbs2().asDiagonal() * model.fixed_design.transpose();
  }
  cov.diagonal().array() += out.noise * out.noise;
  out.factor.compute(cov);
  if (out.factor.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "newton_mode: observation covariance is not positive definite (condition number "
        << condition_number(cov) << ")";
    throw NumericError(msg.str());
  }
  return out;
}

// Posterior mean of the core latent block by GP conditioning.
Eigen::VectorXd observation_space_mode(const LatentModel& model, const Hyper& hyper, const ObservationSpace& obs) {
  const LatentLayout lay = model.layout();
  const Eigen::VectorXd alpha = obs.factor.solve(model.response);
  Eigen::VectorXd mode(lay.total());
  mode.head(lay.spline) = (hyper.sigma * hyper.sigma) * (model.smooth_cross_covariance * alpha);
  mode.segment(lay.spline, lay.poly) =
      model.poly_prior_sd.cwiseAbs2().cwiseProduct(model.poly_design.transpose() * alpha);
  mode.segment(lay.spline + lay.poly, lay.fixed) =
      model.fixed_prior_sd.cwiseAbs2().cwiseProduct(model.fixed_design.transpose() * alpha);
  return mode;
}

// log det(H0 + X^T X / s^2) = log det H0 + log det Cov(y) - 2n log s. The
// latent-space Cholesky loses accuracy on the exact prior's ill-conditioned
// Hessian; Cov(y) stays well conditioned.
double observation_space_log_det(const LatentModel& model, const Hyper& hyper, const ObservationSpace& obs) {
  const LatentLayout lay = model.layout();
  double prior = model.smooth->precision().log_det - 2.0 * static_cast<double>(lay.spline) * std::log(hyper.sigma);
  prior -= 2.0 * model.poly_prior_sd.array().log().sum();
  prior -= 2.0 * model.fixed_prior_sd.array().log().sum();
  return prior + 2.0 * obs.factor.matrixLLT().diagonal().array().log().sum() -
         2.0 * static_cast<double>(model.n()) * std::log(obs.noise);
}

Eigen::VectorXd newton_step(const GaussianApprox& approx, const LatentLayout& lay, const Eigen::VectorXd& grad) {
  if (lay.od == 0) return approx.factor.solve(grad);
  const Eigen::Index core = lay.core();
  const Eigen::VectorXd g_od = grad.tail(lay.od);
  const Eigen::VectorXd rhs =
      grad.head(core) - approx.coupling.transpose() * g_od.cwiseQuotient(approx.od_diagonal);
  Eigen::VectorXd step(lay.total());
  step.head(core) = approx.factor.solve(rhs);
  step.tail(lay.od) = (g_od - approx.coupling * step.head(core)).cwiseQuotient(approx.od_diagonal);
  return step;
}

}  // namespace

Eigen::MatrixXd GaussianApprox::precision() const {
  const Eigen::Index core = core_dim();
  const Eigen::Index od = od_diagonal.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(core + od, core + od);
  h.topLeftCorner(core, core) = core_block;
  if (od > 0) {
    h.bottomLeftCorner(od, core) = coupling;
    h.topRightCorner(core, od) = coupling.transpose();
    h.diagonal().tail(od) = od_diagonal;
  }
  return h;
}

Eigen::MatrixXd GaussianApprox::core_covariance() const {
  return factor.solve(Eigen::MatrixXd::Identity(core_dim(), core_dim()));
}

Eigen::MatrixXd assemble_precision(const LatentModel& model, const Eigen::VectorXd& latent, const Hyper& hyper) {
  const LatentLayout lay = model.layout();
  const Point pt = evaluate(model, lay, latent, hyper);
  GaussianApprox approx;
  Eigen::MatrixXd schur;
  build_hessian(model, lay, hyper, pt.curvature, approx, schur);
  return approx.precision();
}

GaussianApprox newton_mode(const LatentModel& model, const Hyper& hyper, const Eigen::VectorXd* init,
                           const NewtonOptions& options) {
  const LatentLayout lay = model.layout();
  Eigen::VectorXd start = Eigen::VectorXd::Zero(lay.total());
  if (init != nullptr) {
    if (init->size() != lay.total()) throw InvalidArgument("newton_mode: init has the wrong length");
    start = *init;
  }
  std::optional<ObservationSpace> obs;
  if (model.family == Family::gaussian && model.smooth_covariance.size() > 0) {
    obs = observation_space(model, hyper);
    start = observation_space_mode(model, hyper, *obs);
  }
  Point current = evaluate(model, lay, std::move(start), hyper);
  GaussianApprox approx;
  Eigen::MatrixXd schur;
  int steps = 0;
  bool stalled = false;
  while (true) {
    build_hessian(model, lay, hyper, current.curvature, approx, schur);
    approx.factor.compute(schur);
    if (approx.factor.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "newton_mode: negative Hessian is not positive definite (dimension " << schur.rows()
          << ", condition number " << condition_number(schur) << ")";
      throw NumericError(msg.str());
    }
    const double grad_norm = current.gradient.norm();
    const double scale = 1.0 + std::abs(current.value);
    if (grad_norm <= options.tol * scale || stalled) break;

    const Eigen::VectorXd step = newton_step(approx, lay, current.gradient);
    const double decrement = step.dot(current.gradient);
    // The remaining gradient only moves the objective by round-off.
    if (decrement <= 1e-13 * scale) break;
    if (steps >= options.max_iter) {
      std::ostringstream msg;
      msg << "newton_mode: no convergence after " << options.max_iter << " iterations (gradient norm " << grad_norm
          << ")";
      throw IterationError(msg.str());
    }

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      try {
        Point trial = evaluate(model, lay, current.latent + t * step, hyper);
        if (std::isfinite(trial.value) && trial.value >= current.value + 1e-4 * t * decrement) {
          // On ill-conditioned problems the gradient never drops below tol;
          // stop once a full step gains only round-off.
          stalled = t == 1.0 && trial.value - current.value <= 1e-12 * scale;
          current = std::move(trial);
          accepted = true;
          break;
        }
      } catch (const NumericError&) {
        // Overflowing trial step: shrink it.
      }
    }
    ++steps;
    if (!accepted) {
      std::ostringstream msg;
      msg << "newton_mode: line search failed at iteration " << steps << " (gradient norm " << grad_norm << ")";
      throw IterationError(msg.str());
    }
  }

  approx.mode = current.latent;
  approx.log_joint = current.value;
  approx.gradient_norm = current.gradient.norm();
  approx.iterations = steps;
  approx.log_det = 2.0 * approx.factor.matrixLLT().diagonal().array().log().sum();
  if (approx.od_diagonal.size() > 0) approx.log_det += approx.od_diagonal.array().log().sum();
  if (obs) approx.log_det = observation_space_log_det(model, hyper, *obs);
  return approx;
}

double laplace_log_marginal(const GaussianApprox& approx) {
  return approx.log_joint + 0.5 * static_cast<double>(approx.dim()) * kLog2Pi - 0.5 * approx.log_det;
}

double laplace_log_marginal(const LatentModel& model, const Hyper& hyper) {
  return laplace_log_marginal(newton_mode(model, hyper));
}

double condition_number(const Eigen::MatrixXd& precision) {
  if (precision.rows() == 0) return 1.0;
  // Symmetric positive definite: singular values are the eigenvalues.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd sv = eig.eigenvalues().cwiseAbs();
  const double lo = sv.minCoeff();
  return lo > 0.0 ? sv.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

double condition_number(const GaussianApprox& approx) { return condition_number(approx.precision()); }

}  // namespace ospline
