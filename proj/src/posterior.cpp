#include "ospline/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ospline/error.hpp"

namespace ospline {

namespace {

// Rows map the core latent vector to g^{(q)}(xs).
Eigen::MatrixXd core_rows(const PosteriorFit& fit, std::span<const double> xs, int q) {
  const LatentLayout& lay = fit.layout;
  const int p = fit.order();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), lay.core());
  out.leftCols(lay.spline) = fit.smooth->design(xs, q);
  std::vector<double> shifted(xs.begin(), xs.end());
  for (double& x : shifted) x -= fit.origin();
  out.middleCols(lay.spline, lay.poly) = polynomial_design(shifted, p, q);
  return out;
}

void check_order(const PosteriorFit& fit, int q) {
  if (q < 0 || q >= fit.order()) {
    throw InvalidArgument("posterior: derivative order " + std::to_string(q) + " must be below the order p = " +
                          std::to_string(fit.order()));
  }
}

// Adds sigma_m * R^{1/2} z_m to each sample column, R the unit-sigma residual covariance.
void add_residual(const PosteriorFit& fit, const Eigen::MatrixXd& residual, int q, Eigen::MatrixXd& paths) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(residual);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::seed_seq seq{static_cast<std::uint32_t>(fit.seed), static_cast<std::uint32_t>(fit.seed >> 32),
                    static_cast<std::uint32_t>(q), 0x7e51du};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(root.cols());
  for (Eigen::Index m = 0; m < paths.cols(); ++m) {
    for (Eigen::Index r = 0; r < z.size(); ++r) z(r) = normal(rng);
    const double sigma = fit.points[static_cast<std::size_t>(fit.sample_point[static_cast<std::size_t>(m)])].hyper.sigma;
    paths.col(m) += sigma * (root * z);
  }
}

Eigen::MatrixXd sample_paths(const PosteriorFit& fit, std::span<const double> xs, int q) {
  const Eigen::Index core = fit.layout.core();
  Eigen::MatrixXd paths = core_rows(fit, xs, q) * fit.samples.topRows(core);
  if (auto residual = fit.smooth->residual_covariance(xs, q)) add_residual(fit, *residual, q, paths);
  return paths;
}

}  // namespace

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InvalidArgument("sample_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArgument("sample_quantile: probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PosteriorCurve posterior_function(const PosteriorFit& fit, std::span<const double> xs, int q, Transform transform,
                                  double level) {
  check_order(fit, q);
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("posterior_function: level must lie in (0, 1)");
  if (transform == Transform::exp && q > 1) throw InvalidArgument("posterior_function: exp transform needs q <= 1");
  if (fit.samples.cols() == 0) throw InvalidArgument("posterior_function: the fit holds no samples");

  PosteriorCurve out;
  out.xs.assign(xs.begin(), xs.end());
  out.q = q;
  out.transform = transform;
  out.level = level;

  if (transform == Transform::none) {
    out.samples = sample_paths(fit, xs, q);
  } else {
    if (fit.smooth->residual_covariance(xs, 0) || (q == 1 && fit.smooth->residual_covariance(xs, 1))) {
      throw InvalidArgument("posterior_function: exp transform needs every x on the prior's support");
    }
    const Eigen::MatrixXd g = sample_paths(fit, xs, 0);
    out.samples = g.array().exp();
    if (q == 1) out.samples = out.samples.cwiseProduct(sample_paths(fit, xs, 1));
  }

  const Eigen::Index nx = out.samples.rows();
  const Eigen::Index m = out.samples.cols();
  out.mean = out.samples.rowwise().mean();
  out.sd.resize(nx);
  out.lower.resize(nx);
  out.upper.resize(nx);
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Eigen::VectorXd row = out.samples.row(i).transpose();
    out.sd(i) = m > 1 ? std::sqrt((row.array() - out.mean(i)).square().sum() / static_cast<double>(m - 1)) : 0.0;
    std::vector<double> values(row.data(), row.data() + m);
    out.lower(i) = sample_quantile(values, tail);
    out.upper(i) = sample_quantile(std::move(values), 1.0 - tail);
  }
  return out;
}

namespace {

PosteriorMoments mixture_moments(const PosteriorFit& fit, const Eigen::MatrixXd& rows, const Eigen::VectorXd* residual_var) {
  if (rows.cols() != fit.layout.core()) throw InvalidArgument("linear_moments: rows must span the core latent block");
  const Eigen::Index nx = rows.rows();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(nx);
  const Eigen::Index core = fit.layout.core();
  for (const auto& p : fit.points) {
    if (p.weight == 0.0) continue;
    const Eigen::VectorXd mean = rows * p.approx.mode.head(core);
    const Eigen::MatrixXd half = p.approx.factor.matrixL().solve(rows.transpose());
    Eigen::VectorXd var = half.colwise().squaredNorm().transpose();
    if (residual_var) var += p.hyper.sigma * p.hyper.sigma * *residual_var;
    first += p.weight * mean;
    second += p.weight * (var + mean.cwiseAbs2());
  }
  PosteriorMoments out;
  out.mean = first;
  out.sd = (second - first.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace

PosteriorMoments linear_moments(const PosteriorFit& fit, const Eigen::MatrixXd& rows) {
  return mixture_moments(fit, rows, nullptr);
}

PosteriorMoments posterior_moments(const PosteriorFit& fit, std::span<const double> xs, int q) {
  check_order(fit, q);
  const Eigen::MatrixXd rows = core_rows(fit, xs, q);
  const auto residual = fit.smooth->residual_covariance(xs, q);
  if (!residual) return mixture_moments(fit, rows, nullptr);
  const Eigen::VectorXd var = residual->diagonal();
  return mixture_moments(fit, rows, &var);
}

FixedEffectSummary fixed_effect_summary(const PosteriorFit& fit, double level, std::span<const DerivedEffect> derived) {
  const LatentLayout& lay = fit.layout;
  if (fit.samples.cols() == 0) throw InvalidArgument("fixed_effect_summary: the fit holds no samples");
  Eigen::MatrixXd draws = fit.samples.middleRows(lay.spline + lay.poly, lay.fixed);
  FixedEffectSummary out;
  out.names = fit.fixed_names;
  if (out.names.empty()) {
    for (Eigen::Index r = 0; r < lay.fixed; ++r) out.names.push_back("beta" + std::to_string(r + 1));
  }
  if (!derived.empty()) {
    const Eigen::MatrixXd base = draws;
    draws.conservativeResize(lay.fixed + static_cast<Eigen::Index>(derived.size()), Eigen::NoChange);
    for (std::size_t d = 0; d < derived.size(); ++d) {
      const DerivedEffect& eff = derived[d];
      if (eff.first < 0 || eff.count < 1 || eff.first + eff.count > lay.fixed) {
        throw InvalidArgument("fixed_effect_summary: derived effect '" + eff.name + "' spans invalid columns");
      }
      draws.row(lay.fixed + static_cast<Eigen::Index>(d)) = -base.middleRows(eff.first, eff.count).colwise().sum();
      out.names.push_back(eff.name);
    }
  }
  const Eigen::Index rows = draws.rows();
  const Eigen::Index m = draws.cols();
  out.mean = draws.rowwise().mean();
  out.sd.resize(rows);
  out.lower.resize(rows);
  out.upper.resize(rows);
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = draws.row(i).transpose();
    out.sd(i) = m > 1 ? std::sqrt((row.array() - out.mean(i)).square().sum() / static_cast<double>(m - 1)) : 0.0;
    std::vector<double> values(row.data(), row.data() + m);
    out.lower(i) = sample_quantile(values, tail);
    out.upper(i) = sample_quantile(std::move(values), 1.0 - tail);
  }
  return out;
}

}  // namespace ospline
