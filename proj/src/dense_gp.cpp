#include "ospline/dense_gp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ospline/error.hpp"

namespace ospline {

namespace {

double monomial_derivative(double x, int l, int q) {
  if (l < q) return 0.0;
  double v = factorial(l) / factorial(l - q);
  for (int i = 0; i < l - q; ++i) v *= x;
  return v;
}

double condition_number_of(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

GpPrediction dense_gp_fit(const CrossCovariance& cov, double origin, std::span<const double> xs,
                          std::span<const double> ys, double noise_sd, std::span<const double> poly_prior_sd,
                          std::span<const PredictionPoint> predict_at) {
  if (xs.size() != ys.size()) throw InvalidArgument("dense_gp_fit: xs and ys differ in length");
  if (!(noise_sd > 0.0)) throw InvalidArgument("dense_gp_fit: noise_sd must be positive");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(predict_at.size());
  const int p = static_cast<int>(poly_prior_sd.size());

  auto full_cov = [&](double x1, int q1, double x2, int q2) {
    double c = cov(x1, q1, x2, q2);
    for (int l = 0; l < p; ++l) {
      const double tau = poly_prior_sd[static_cast<std::size_t>(l)];
      c += tau * tau * monomial_derivative(x1 - origin, l, q1) * monomial_derivative(x2 - origin, l, q2);
    }
    return c;
  };

  Eigen::MatrixXd k_yy(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k_yy(i, j) = full_cov(xs[i], 0, xs[j], 0);
      k_yy(j, i) = k_yy(i, j);
    }
    k_yy(i, i) += noise_sd * noise_sd;
  }
  Eigen::MatrixXd k_py(m, n);
  Eigen::VectorXd prior_var(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto& pt = predict_at[static_cast<std::size_t>(a)];
    for (Eigen::Index j = 0; j < n; ++j) k_py(a, j) = full_cov(pt.x, pt.q, xs[j], 0);
    prior_var(a) = full_cov(pt.x, pt.q, pt.x, pt.q);
  }

  GpPrediction out;
  if (n == 0) {
    out.mean = Eigen::VectorXd::Zero(m);
    out.sd = prior_var.cwiseMax(0.0).cwiseSqrt();
    return out;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(k_yy);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "dense GP conditioning: Cholesky of the " << n << "x" << n
        << " observation covariance failed (condition number " << condition_number_of(k_yy) << ")";
    throw NumericError(msg.str());
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  out.mean = k_py * llt.solve(y);
  const Eigen::MatrixXd half = llt.matrixL().solve(k_py.transpose());
  out.sd = (prior_var - half.colwise().squaredNorm().transpose()).cwiseMax(0.0).cwiseSqrt();
  return out;
}

GpPrediction exact_gp_fit(const IWPKernel& kernel, std::span<const double> xs, std::span<const double> ys,
                          double noise_sd, std::span<const double> poly_prior_sd,
                          std::span<const PredictionPoint> predict_at, double origin) {
  if (static_cast<int>(poly_prior_sd.size()) != kernel.order) {
    throw InvalidArgument("exact_gp_fit: poly_prior_sd needs one entry per polynomial degree 0..p-1");
  }
  for (const auto& pt : predict_at) {
    if (pt.q < 0 || pt.q >= kernel.order) throw InvalidArgument("exact_gp_fit: prediction order must be < p");
  }
  auto cov = [&](double x1, int q1, double x2, int q2) {
    return exact_cov(kernel, x1 - origin, x2 - origin, q1, q2);
  };
  return dense_gp_fit(cov, origin, xs, ys, noise_sd, poly_prior_sd, predict_at);
}

}  // namespace ospline
