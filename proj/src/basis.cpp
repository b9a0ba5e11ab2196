#include "ospline/basis.hpp"

#include <cmath>
#include <string>

#include "ospline/error.hpp"

namespace ospline {

namespace {

constexpr std::array<double, kMaxOrder + 1> make_factorials() {
  std::array<double, kMaxOrder + 1> f{};
  f[0] = 1.0;
  for (int n = 1; n <= kMaxOrder; ++n) f[n] = f[n - 1] * n;
  return f;
}

constexpr auto kFactorials = make_factorials();

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Order-m O-spline on cell (lo, lo + d], evaluated at x > lo.
double ospline_piece(double x, double lo, double d, int m) {
  const double hi = lo + d;
  if (m == 0) return x <= hi ? 1.0 : 0.0;
  if (x <= hi) return ipow(x - lo, m) / kFactorials[m];
  const double u = x - hi;
  double sum = 0.0;
  double dpow = 1.0;
  for (int i = 1; i <= m; ++i) {
    dpow *= d;
    sum += dpow * ipow(u, m - i) / (kFactorials[i] * kFactorials[m - i]);
  }
  return sum;
}

}  // namespace

double factorial(int n) {
  if (n < 0 || n > kMaxOrder) {
    throw InvalidArgument("factorial: argument out of table range");
  }
  return kFactorials[n];
}

OSplineBasis::OSplineBasis(int order, KnotSet knots) : order_(order), knots_(std::move(knots)) {
  if (order_ < 1 || order_ > kMaxOrder) {
    throw InvalidArgument("OSplineBasis: order must be in [1, " + std::to_string(kMaxOrder) + "]");
  }
}

double OSplineBasis::eval(std::size_t j, double x, int q) const {
  if (j >= knots_.size()) {
    throw InvalidArgument("basis_eval: index " + std::to_string(j) + " out of range");
  }
  if (q < 0 || q > order_) {
    throw InvalidArgument("basis_eval: derivative order " + std::to_string(q) + " exceeds basis order " +
                          std::to_string(order_));
  }
  if (!(x >= knots_.region_start())) {
    throw InvalidArgument("basis_eval: x lies before region_start");
  }
  const double lo = knots_.lower(j);
  if (x <= lo) return 0.0;
  // Right-closed cells: on the knot itself we are still in the second branch,
  // which agrees with the third branch there.
  return ospline_piece(x, lo, knots_.spacing(j), order_ - q);
}

void OSplineBasis::eval_all(double x, int q, std::span<double> out) const {
  if (q < 0 || q > order_) {
    throw InvalidArgument("basis_eval: derivative order " + std::to_string(q) + " exceeds basis order " +
                          std::to_string(order_));
  }
  const int m = order_ - q;
  for (std::size_t j = 0; j < knots_.size(); ++j) {
    const double lo = knots_.lower(j);
    out[j] = x <= lo ? 0.0 : ospline_piece(x, lo, knots_.spacing(j), m);
  }
}

DesignBlock OSplineBasis::design(std::span<const double> xs, int q) const {
  if (q < 0 || q >= order_) {
    throw InvalidArgument("design_matrix: derivative order must satisfy 0 <= q < p (q=" + std::to_string(q) +
                          ", p=" + std::to_string(order_) + ")");
  }
  DesignBlock block;
  block.derivative_order = q;
  block.source_order = order_;
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto k = static_cast<Eigen::Index>(knots_.size());
  block.values.setZero(n, k);
  std::vector<double> row(knots_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = xs[i];
    if (!knots_.contains(x)) {
      throw InvalidArgument("design_matrix: x = " + std::to_string(x) + " lies outside [" +
                            std::to_string(knots_.region_start()) + ", " + std::to_string(knots_.region_end()) +
                            "]");
    }
    eval_all(x, q, row);
    for (Eigen::Index j = 0; j < k; ++j) block.values(i, j) = row[j];
  }
  return block;
}

Eigen::VectorXd OSplineBasis::weight_precision() const { return ospline::weight_precision(knots_); }

double basis_eval(const OSplineBasis& basis, std::size_t j, double x, int q) { return basis.eval(j, x, q); }

DesignBlock design_matrix(const OSplineBasis& basis, std::span<const double> xs, int q) {
  return basis.design(xs, q);
}

Eigen::MatrixXd polynomial_design(std::span<const double> xs, int p, int q) {
  if (p < 1 || p > kMaxOrder) throw InvalidArgument("polynomial_design: order out of range");
  if (q < 0 || q >= p) throw InvalidArgument("polynomial_design: derivative order must satisfy 0 <= q < p");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), p);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int l = q; l < p; ++l) {
      // d^q/dx^q x^l = l! / (l-q)! x^(l-q)
      out(static_cast<Eigen::Index>(i), l) = kFactorials[l] / kFactorials[l - q] * ipow(xs[i], l - q);
    }
  }
  return out;
}

Eigen::VectorXd weight_precision(const KnotSet& knots) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(knots.size()));
  for (std::size_t j = 0; j < knots.size(); ++j) d(static_cast<Eigen::Index>(j)) = knots.spacing(j);
  return d;
}

}  // namespace ospline
