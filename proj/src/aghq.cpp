#include "ospline/aghq.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ospline/error.hpp"
#include "ospline/parallel.hpp"
#include "ospline/quadrature.hpp"

namespace ospline {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Laplace marginal as a function of theta, warm-starting Newton from the
// last successful mode.
class MarginalObjective {
 public:
  explicit MarginalObjective(const LatentModel& model) : model_(model) {}

  double operator()(const Eigen::VectorXd& theta) {
    ++evaluations_;
    try {
      const Hyper h = model_.hyper_from_theta(theta);
      GaussianApprox approx = newton_mode(model_, h, warm_.size() > 0 ? &warm_ : nullptr);
      warm_ = approx.mode;
      return laplace_log_marginal(approx);
    } catch (const NumericError&) {
      return kNegInf;
    }
  }

  const Eigen::VectorXd& warm() const { return warm_; }
  int evaluations() const { return evaluations_; }

 private:
  const LatentModel& model_;
  Eigen::VectorXd warm_;
  int evaluations_ = 0;
};

struct Derivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

Derivatives finite_differences(MarginalObjective& f, const Eigen::VectorXd& theta, double h) {
  const Eigen::Index d = theta.size();
  Derivatives out;
  out.value = f(theta);
  out.gradient.resize(d);
  out.hessian.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd up = theta;
    Eigen::VectorXd down = theta;
    up(i) += h;
    down(i) -= h;
    const double fu = f(up);
    const double fd = f(down);
    out.gradient(i) = (fu - fd) / (2.0 * h);
    out.hessian(i, i) = (fu - 2.0 * out.value + fd) / (h * h);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = theta, pm = theta, mp = theta, mm = theta;
      pp(i) += h, pp(j) += h;
      pm(i) += h, pm(j) -= h;
      mp(i) -= h, mp(j) += h;
      mm(i) -= h, mm(j) -= h;
      const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
      out.hessian(i, j) = v;
      out.hessian(j, i) = v;
    }
  }
  return out;
}

bool all_finite(const Derivatives& d) {
  return std::isfinite(d.value) && d.gradient.allFinite() && d.hessian.allFinite();
}

Eigen::VectorXd starting_theta(const LatentModel& model) {
  Hyper h;
  h.sigma = model.sigma_prior.median();
  if (model.has_free_family_sd()) h.family_sd = model.family_prior->median();
  return model.theta_from_hyper(h);
}

struct ThetaMode {
  Eigen::VectorXd theta;
  Eigen::MatrixXd neg_hessian;
  Eigen::VectorXd latent;
  int iterations = 0;
};

ThetaMode maximize_marginal(const LatentModel& model, double h) {
  MarginalObjective f(model);
  Eigen::VectorXd theta = starting_theta(model);
  const double grad_tol = 1e-5;
  const int max_iter = 200;
  // Large sigma with near-noiseless data can leave the latent Hessian
  // numerically singular; retreat toward smaller sigma before giving up.
  Derivatives d = finite_differences(f, theta, h);
  for (int retreat = 0; retreat < 12 && !all_finite(d); ++retreat) {
    theta(0) -= std::log(4.0);
    d = finite_differences(f, theta, h);
  }
  if (!all_finite(d)) throw IterationError("aghq: Laplace marginal is not finite at the starting hyperparameters");
  int it = 0;
  for (; it < max_iter; ++it) {
    if (d.gradient.norm() <= grad_tol) break;
    Eigen::VectorXd step;
    const Eigen::MatrixXd neg = -d.hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(neg);
    // Predicted gain of the full Newton step; +inf when the model is not concave.
    double decrement = std::numeric_limits<double>::infinity();
    if (llt.info() == Eigen::Success) {
      step = llt.solve(d.gradient);
      decrement = 0.5 * d.gradient.dot(step);
    } else {
      step = d.gradient / std::max(1.0, d.gradient.norm());
    }
    const double len = step.norm();
    if (len > 2.0) step *= 2.0 / len;

    double t = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = theta + t * step;
      const double v = f(trial);
      if (std::isfinite(v) && v > d.value) {
        theta = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (d.gradient.norm() <= 1e-3 || decrement <= 1e-3) break;
      std::ostringstream msg;
      msg << "aghq: hyperparameter line search failed (gradient norm " << d.gradient.norm() << ", predicted gain "
          << decrement << ")";
      throw IterationError(msg.str());
    }
    d = finite_differences(f, theta, h);
    if (!all_finite(d)) throw IterationError("aghq: Laplace marginal is not finite near the optimum");
    if ((t * step).norm() < 1e-10) break;
  }
  if (it >= max_iter) {
    std::ostringstream msg;
    msg << "aghq: hyperparameter optimizer did not converge in " << max_iter << " iterations (gradient norm "
        << d.gradient.norm() << ")";
    throw IterationError(msg.str());
  }
  ThetaMode out;
  out.theta = theta;
  out.neg_hessian = -d.hessian;
  // Warm start for the grid from the mode itself.
  f(theta);
  out.latent = f.warm();
  out.iterations = it;
  return out;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out;
}

void draw_samples(PosteriorFit& fit, int samples, std::uint64_t seed, int threads) {
  if (samples < 0) throw InvalidArgument("aghq: sample count must be non-negative");
  fit.seed = seed;
  const Eigen::Index core = fit.layout.core();
  fit.samples.resize(core, samples);
  fit.sample_point.assign(static_cast<std::size_t>(samples), 0);
  if (samples == 0) return;

  std::vector<double> weights;
  for (const auto& p : fit.points) weights.push_back(p.weight);
  std::mt19937_64 master(seed);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::vector<std::vector<Eigen::Index>> columns(fit.points.size());
  for (int m = 0; m < samples; ++m) {
    const int j = pick(master);
    fit.sample_point[static_cast<std::size_t>(m)] = j;
    columns[static_cast<std::size_t>(j)].push_back(m);
  }
  parallel_for(fit.points.size(), threads, [&](std::size_t j) {
    const auto& cols = columns[j];
    if (cols.empty()) return;
    std::mt19937_64 rng(point_seed(seed, j));
    std::normal_distribution<double> normal;
    const auto count = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd z(core, count);
    for (Eigen::Index c = 0; c < count; ++c) {
      for (Eigen::Index r = 0; r < core; ++r) z(r, c) = normal(rng);
    }
    const GaussianApprox& approx = fit.points[j].approx;
    const Eigen::MatrixXd draws = approx.factor.matrixU().solve(z);
    const Eigen::VectorXd center = approx.mode.head(core);
    for (Eigen::Index c = 0; c < count; ++c) fit.samples.col(cols[static_cast<std::size_t>(c)]) = draws.col(c) + center;
  });
}

PosteriorFit empty_fit(const LatentModel& model) {
  PosteriorFit fit;
  fit.smooth = model.smooth;
  fit.layout = model.layout();
  fit.family = model.family;
  fit.fixed_names = model.fixed_names;
  fit.theta_names = model.theta_names();
  return fit;
}

}  // namespace

PosteriorFit aghq_fit(const LatentModel& model, const AghqOptions& options) {
  if (options.num_quad < 1) throw InvalidArgument("aghq: num_quad must be >= 1");
  if (options.num_quad > 60) throw InvalidArgument("aghq: num_quad must be <= 60");
  if (!(options.fd_step > 0.0)) throw InvalidArgument("aghq: fd_step must be positive");
  const int dim = model.theta_dim();
  if (dim > 2) throw InvalidArgument("aghq: at most two hyperparameters are supported");

  PosteriorFit fit = empty_fit(model);
  fit.num_quad = options.num_quad;
  const ThetaMode mode = maximize_marginal(model, options.fd_step);
  fit.theta_mode = mode.theta;
  fit.theta_hessian = mode.neg_hessian;
  fit.optimizer_iterations = mode.iterations;

  const Eigen::LLT<Eigen::MatrixXd> hess(mode.neg_hessian);
  if (hess.info() != Eigen::Success) {
    throw IterationError("aghq: Laplace marginal is not locally concave at the optimum");
  }
  // theta = mode + L z with L L^T = H^{-1}.
  const Eigen::MatrixXd cov = hess.solve(Eigen::MatrixXd::Identity(dim, dim));
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  const double log_det_l = chol.diagonal().array().log().sum();

  const GaussHermiteRule rule = gauss_hermite(options.num_quad);
  const auto k = static_cast<std::size_t>(options.num_quad);
  const std::size_t count = dim == 1 ? k : k * k;
  fit.points.resize(count);
  std::vector<double> log_rule(count);
  std::vector<Eigen::VectorXd> zs(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Eigen::VectorXd z(dim);
    double lw = 0.0;
    if (dim == 1) {
      z(0) = rule.nodes(static_cast<Eigen::Index>(idx));
      lw = std::log(rule.weights(static_cast<Eigen::Index>(idx)));
    } else {
      const auto i = static_cast<Eigen::Index>(idx / k);
      const auto j = static_cast<Eigen::Index>(idx % k);
      z << rule.nodes(i), rule.nodes(j);
      lw = std::log(rule.weights(i)) + std::log(rule.weights(j));
    }
    zs[idx] = z;
    log_rule[idx] = lw;
  }

  parallel_for(count, options.threads, [&](std::size_t idx) {
    QuadPoint& qp = fit.points[idx];
    qp.theta = mode.theta + chol * zs[idx];
    qp.hyper = model.hyper_from_theta(qp.theta);
    qp.approx = newton_mode(model, qp.hyper, &mode.latent);
    qp.log_laplace = laplace_log_marginal(qp.approx);
    if (options.condition_numbers) qp.condition = condition_number(qp.approx);
  });

  std::vector<double> log_w(count);
  double top = kNegInf;
  for (std::size_t idx = 0; idx < count; ++idx) {
    log_w[idx] = log_rule[idx] + 0.5 * dim * kLog2Pi + 0.5 * zs[idx].squaredNorm() + fit.points[idx].log_laplace +
                 log_det_l;
    top = std::max(top, log_w[idx]);
  }
  if (!std::isfinite(top)) throw NumericError("aghq: quadrature weights are not finite");
  double total = 0.0;
  for (double lw : log_w) total += std::exp(lw - top);
  fit.log_evidence = top + std::log(total);
  for (std::size_t idx = 0; idx < count; ++idx) fit.points[idx].weight = std::exp(log_w[idx] - top) / total;

  draw_samples(fit, options.samples, options.seed, options.threads);
  return fit;
}

PosteriorFit fixed_hyper_fit(const LatentModel& model, const Hyper& hyper, int samples, std::uint64_t seed) {
  PosteriorFit fit = empty_fit(model);
  fit.num_quad = 1;
  QuadPoint qp;
  qp.theta = model.theta_from_hyper(hyper);
  qp.hyper = hyper;
  qp.approx = newton_mode(model, hyper);
  qp.log_laplace = laplace_log_marginal(qp.approx);
  qp.weight = 1.0;
  fit.theta_mode = qp.theta;
  fit.theta_hessian = Eigen::MatrixXd::Zero(qp.theta.size(), qp.theta.size());
  fit.log_evidence = qp.log_laplace;
  fit.points.push_back(std::move(qp));
  draw_samples(fit, samples, seed, 1);
  return fit;
}

double max_condition_number(const PosteriorFit& fit) {
  double out = 0.0;
  for (const auto& p : fit.points) {
    const double c = std::isnan(p.condition) ? condition_number(p.approx) : p.condition;
    out = std::max(out, c);
  }
  return out;
}

Hyper posterior_hyper_mean(const PosteriorFit& fit) {
  Hyper out;
  out.sigma = 0.0;
  double fam = 0.0;
  bool has_family = false;
  for (const auto& p : fit.points) {
    out.sigma += p.weight * p.hyper.sigma;
    if (!std::isnan(p.hyper.family_sd)) {
      fam += p.weight * p.hyper.family_sd;
      has_family = true;
    }
  }
  if (has_family) out.family_sd = fam;
  return out;
}

}  // namespace ospline
