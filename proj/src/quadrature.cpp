#include "ospline/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ospline/basis.hpp"
#include "ospline/error.hpp"

namespace ospline {

namespace {

// Kronrod 15-point nodes/weights with embedded Gauss 7-point weights.
constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double value;
  double error;
};

Segment gk15(const std::function<double(double)>& f, double a, double b, long& evals) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  evals += 15;
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

struct Adaptive {
  const std::function<double(double)>& f;
  int max_depth;
  long evals = 0;
  bool failed = false;
  double worst_error = 0.0;
  double worst_a = 0.0;
  double worst_b = 0.0;

  Segment run(double a, double b, double tol, const Segment& whole, int depth) {
    if (whole.error <= tol || b - a <= 0.0) return whole;
    if (depth >= max_depth) {
      failed = true;
      if (whole.error > worst_error) {
        worst_error = whole.error;
        worst_a = a;
        worst_b = b;
      }
      return whole;
    }
    const double m = 0.5 * (a + b);
    const Segment left = gk15(f, a, m, evals);
    const Segment right = gk15(f, m, b, evals);
    const Segment l = run(a, m, 0.5 * tol, left, depth + 1);
    const Segment r = run(m, b, 0.5 * tol, right, depth + 1);
    return {l.value + r.value, l.error + r.error};
  }
};

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

// Kernel of an m-fold repeated integral from 0 to x, m >= 1.
double repeated_kernel(double x, double u, int m) { return ipow(x - u, m - 1) / factorial(m - 1); }

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                    std::span<const double> breakpoints, int max_depth) {
  QuadratureResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  for (double bp : breakpoints) {
    if (bp > a && bp < b) cuts.push_back(bp);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Adaptive adaptive{f, max_depth};
  const double width = b - a;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    const double tol = abs_tol * (hi - lo) / width;
    const Segment first = gk15(f, lo, hi, adaptive.evals);
    const Segment seg = adaptive.run(lo, hi, tol, first, 0);
    out.value += seg.value;
    out.error_estimate += seg.error;
  }
  out.evaluations = adaptive.evals;
  if (adaptive.failed && out.error_estimate > abs_tol) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: error estimate "
        << out.error_estimate << " > tolerance " << abs_tol << " after " << out.evaluations
        << " evaluations; worst segment [" << adaptive.worst_a << ", " << adaptive.worst_b << "] with error "
        << adaptive.worst_error;
    throw NumericError(msg.str());
  }
  out.value *= sign;
  return out;
}

double integrate_cov_oracle(const std::function<double(double, double)>& cov, double s, double t, int steps_s,
                            int steps_t, double abs_tol, std::span<const double> breakpoints) {
  if (steps_s < 0 || steps_t < 0) throw InvalidArgument("integrate_cov_oracle: step counts must be >= 0");
  if (s < 0.0 || t < 0.0) throw InvalidArgument("integrate_cov_oracle: s and t must be >= 0");

  // Integrates in v (the t-argument) at a fixed u.
  auto integrate_t = [&](double u, double tol) {
    if (steps_t == 0) return cov(u, t);
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    cuts.push_back(u);
    return integrate_adaptive([&](double v) { return repeated_kernel(t, v, steps_t) * cov(u, v); }, 0.0, t, tol,
                              cuts)
        .value;
  };

  if (steps_s == 0) return integrate_t(s, abs_tol);

  // Inner tolerance is tightened so the outer estimate is dominated by its own error.
  const double outer_scale = std::max(1.0, ipow(s, steps_s) / factorial(steps_s));
  const double inner_tol = 0.1 * abs_tol / outer_scale;
  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  cuts.push_back(t);
  return integrate_adaptive([&](double u) { return repeated_kernel(s, u, steps_s) * integrate_t(u, inner_tol); },
                            0.0, s, abs_tol, cuts)
      .value;
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite: need at least one node");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  // Symmetrize to kill rounding asymmetry; the rule is symmetric about 0.
  for (int i = 0; i < n / 2; ++i) {
    const double z = 0.5 * (rule.nodes(n - 1 - i) - rule.nodes(i));
    const double w = 0.5 * (rule.weights(i) + rule.weights(n - 1 - i));
    rule.nodes(i) = -z;
    rule.nodes(n - 1 - i) = z;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace ospline
