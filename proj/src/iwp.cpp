#include "ospline/iwp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "ospline/io.hpp"

namespace ospline {

IWPKernel::IWPKernel(int p, double sd) : order(p), sigma(sd) {
  if (p < 1 || p > kMaxOrder) throw InvalidArgument("IWPKernel: order out of range");
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw InvalidArgument("IWPKernel: sigma must be finite and >= 0");
}

double exact_cov(const IWPKernel& kernel, double s, double t, int q1, int q2) {
  return iwp_cov<double>(kernel.order, kernel.sigma, s, t, q1, q2);
}

double ospline_cov(const OSplineBasis& basis, double sigma, double s, double t, int q1, int q2) {
  const int p = basis.order();
  if (q1 < 0 || q2 < 0 || q1 >= p || q2 >= p) {
    throw InvalidArgument("ospline_cov: derivative orders must satisfy 0 <= q < p");
  }
  const auto& knots = basis.knots();
  if (!knots.contains(s) || !knots.contains(t)) {
    throw InvalidArgument("ospline_cov: locations must lie inside the basis region");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    // Both factors vanish left of the cell, so stop at the first empty one.
    if (s <= knots.lower(j) || t <= knots.lower(j)) break;
    total += basis.eval(j, s, q1) * basis.eval(j, t, q2) / knots.spacing(j);
  }
  return sigma * sigma * total;
}

bool CovGrid::is_symmetric_psd(double rel_tol) const {
  if (values.rows() != values.cols()) return false;
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if ((values - values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(values, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  return eig.eigenvalues().minCoeff() >= -rel_tol * std::max(lmax, 0.0);
}

CovGrid exact_cov_grid(const IWPKernel& kernel, std::span<const double> s, std::span<const double> t, int q1, int q2,
                       double origin) {
  CovGrid grid;
  grid.s_values.assign(s.begin(), s.end());
  grid.t_values.assign(t.begin(), t.end());
  grid.q1 = q1;
  grid.q2 = q2;
  grid.values.resize(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          exact_cov(kernel, s[i] - origin, t[j] - origin, q1, q2);
    }
  }
  return grid;
}

CovGrid ospline_cov_grid(const OSplineBasis& basis, double sigma, std::span<const double> s,
                         std::span<const double> t, int q1, int q2) {
  CovGrid grid;
  grid.s_values.assign(s.begin(), s.end());
  grid.t_values.assign(t.begin(), t.end());
  grid.q1 = q1;
  grid.q2 = q2;
  const Eigen::MatrixXd left = basis.design(s, q1).values;
  const Eigen::MatrixXd right = basis.design(t, q2).values;
  const Eigen::VectorXd inv_d = basis.weight_precision().cwiseInverse();
  grid.values = sigma * sigma * (left * inv_d.asDiagonal() * right.transpose());
  return grid;
}

std::vector<double> regular_grid(double a, double b, int grid_density) {
  if (grid_density < 1) throw InvalidArgument("regular_grid: grid_density must be positive");
  std::vector<double> g(static_cast<std::size_t>(grid_density) + 1);
  for (int i = 0; i <= grid_density; ++i) g[static_cast<std::size_t>(i)] = a + (b - a) * i / grid_density;
  g.back() = b;
  return g;
}

double sup_cov_error(int p, int k, double region_start, double region_end, int grid_density, int q1, int q2) {
  if (k < 1) throw InvalidArgument("sup_cov_error: k must be positive");
  if (grid_density < 10 * k) {
    throw InvalidArgument("sup_cov_error: grid_density must be at least 10 k to resolve the knot cells");
  }
  const OSplineBasis basis(p, build_equal_knots(region_start, region_end, static_cast<std::size_t>(k)));
  const auto grid = regular_grid(region_start, region_end, grid_density);
  const CovGrid approx = ospline_cov_grid(basis, 1.0, grid, grid, q1, q2);
  const CovGrid exact = exact_cov_grid(IWPKernel(p, 1.0), grid, grid, q1, q2, region_start);
  return (exact.values - approx.values).cwiseAbs().maxCoeff();
}

void write_cov_compare_csv(std::ostream& out, const CovGrid& exact, const CovGrid& approx) {
  if (exact.values.rows() != approx.values.rows() || exact.values.cols() != approx.values.cols()) {
    throw InvalidArgument("write_cov_compare_csv: grid shapes differ");
  }
  out << "s,t,q1,q2,exact,approx,abs_err\n";
  for (Eigen::Index i = 0; i < exact.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < exact.values.cols(); ++j) {
      const double e = exact.values(i, j);
      const double a = approx.values(i, j);
      out << format_double(exact.s_values[static_cast<std::size_t>(i)]) << ','
          << format_double(exact.t_values[static_cast<std::size_t>(j)]) << ',' << exact.q1 << ',' << exact.q2 << ','
          << format_double(e) << ',' << format_double(a) << ',' << format_double(std::abs(e - a)) << '\n';
    }
  }
}

}  // namespace ospline
