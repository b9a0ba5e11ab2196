#include "ospline/smooth_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ospline/error.hpp"
#include "ospline/iwp.hpp"

namespace ospline {

double PrecisionBlock::quadratic(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (is_diagonal()) return (diagonal.array() * w.array().square()).sum();
  if (root.size() > 0) return (root * w).squaredNorm();
  return w.dot(dense * w);
}

Eigen::VectorXd PrecisionBlock::apply(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (is_diagonal()) return diagonal.cwiseProduct(w);
  if (root.size() > 0) return root.transpose() * (root * w);
  return dense * w;
}

std::optional<Eigen::MatrixXd> SmoothPrior::residual_covariance(std::span<const double>, int) const {
  return std::nullopt;
}

std::optional<Eigen::MatrixXd> SmoothPrior::covariance(std::span<const double>) const { return std::nullopt; }

std::optional<Eigen::MatrixXd> SmoothPrior::cross_covariance(std::span<const double>) const { return std::nullopt; }

OSplinePrior::OSplinePrior(OSplineBasis basis) : basis_(std::move(basis)) {
  precision_.diagonal = basis_.weight_precision();
  precision_.log_det = precision_.diagonal.array().log().sum();
}

std::string OSplinePrior::name() const {
  return "ospline(p=" + std::to_string(basis_.order()) + ",k=" + std::to_string(basis_.size()) + ")";
}

Eigen::MatrixXd OSplinePrior::design(std::span<const double> xs, int q) const { return basis_.design(xs, q).values; }

namespace {

// T(h): state transition over a step h, T_ab = h^(b-a) / (b-a)! for b >= a.
Eigen::MatrixXd transition(int p, double h) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a) {
    double term = 1.0;
    for (int b = a; b < p; ++b) {
      t(a, b) = term;
      term *= h / static_cast<double>(b - a + 1);
    }
  }
  return t;
}

// Covariance of the state innovations accumulated over (0, u] and (0, v]
// from a zero state, rows q1 at u and the full state at v.
Eigen::MatrixXd innovation_cov(int p, double u, double v, int q1) {
  Eigen::MatrixXd c(1, p);
  for (int b = 0; b < p; ++b) c(0, b) = iwp_cov<double>(p, 1.0, u, v, q1, b);
  return c;
}

Eigen::MatrixXd innovation_cov(int p, double h) {
  Eigen::MatrixXd c(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) c(a, b) = iwp_cov<double>(p, 1.0, h, h, a, b);
  }
  return c;
}

}  // namespace

ExactIWPPrior::ExactIWPPrior(int order, double origin, double region_end, std::vector<double> support)
    : order_(order), origin_(origin), region_end_(region_end) {
  if (order < 1 || order > kMaxOrder) throw InvalidArgument("ExactIWPPrior: order out of range");
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  for (double x : support) {
    if (x < origin || x > region_end) throw InvalidArgument("ExactIWPPrior: support point outside the region");
    if (x > origin) support_.push_back(x);
  }
  if (support_.empty()) throw InvalidArgument("ExactIWPPrior: no support points beyond the origin");

  const int p = order_;
  const auto m = static_cast<Eigen::Index>(support_.size());
  const Eigen::Index dim = m * p;
  // Row block i of the root whitens the innovation s_i - T(h_i) s_{i-1}.
  precision_.root = Eigen::MatrixXd::Zero(dim, dim);
  precision_.log_det = 0.0;
  double prev = origin_;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = support_[static_cast<std::size_t>(i)] - prev;
    const Eigen::LLT<Eigen::MatrixXd> step(innovation_cov(p, h));
    if (step.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "exact IWP prior: innovation covariance over step " << h << " is not positive definite";
      throw NumericError(msg.str());
    }
    const Eigen::MatrixXd whiten = step.matrixL().solve(Eigen::MatrixXd::Identity(p, p));
    precision_.log_det -= 2.0 * step.matrixLLT().diagonal().array().log().sum();
    precision_.root.block(i * p, i * p, p, p) = whiten;
    if (i > 0) precision_.root.block(i * p, (i - 1) * p, p, p) = -whiten * transition(p, h);
    prev = support_[static_cast<std::size_t>(i)];
  }
  precision_.dense = precision_.root.transpose() * precision_.root;
  if (!std::isfinite(precision_.log_det) || !precision_.dense.allFinite()) {
    throw NumericError("exact IWP prior: state precision is not finite");
  }
}

std::string ExactIWPPrior::name() const {
  return "exact(p=" + std::to_string(order_) + ",n=" + std::to_string(support_.size()) + ")";
}

Eigen::Index ExactIWPPrior::match(double x) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), x);
  if (it != support_.end() && *it == x) return it - support_.begin();
  return -1;
}

Eigen::Index ExactIWPPrior::gap_of(double x) const {
  return std::lower_bound(support_.begin(), support_.end(), x) - support_.begin();
}

double ExactIWPPrior::left_point(Eigen::Index gap) const {
  return gap == 0 ? origin_ : support_[static_cast<std::size_t>(gap - 1)];
}

// Off the support, with left state s_l at x_l (zero at the origin) and right
// state s_r at x_r (if any), W^{(q)}(x) = [T(u) s_l]_q + Z_q(u) where Z is the
// innovation from x_l. Conditioning Z on Z(x_r - x_l) = s_r - T(x_r - x_l) s_l
// gives the bridge mean (linear in the two states) and a residual that is
// independent across gaps.
Eigen::MatrixXd ExactIWPPrior::design(std::span<const double> xs, int q) const {
  if (q < 0 || q >= order_) throw InvalidArgument("ExactIWPPrior::design: derivative order must be < p");
  const int p = order_;
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(support_.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, m * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = xs[i];
    if (x < origin_ || x > region_end_) throw InvalidArgument("ExactIWPPrior::design: x outside region");
    if (x == origin_) continue;
    const auto j = match(x);
    if (j >= 0) {
      out(i, j * p + q) = 1.0;
      continue;
    }
    const Eigen::Index gap = gap_of(x);
    const double u = x - left_point(gap);
    Eigen::RowVectorXd left = transition(p, u).row(q);
    if (gap < m) {
      const double h = support_[static_cast<std::size_t>(gap)] - left_point(gap);
      const Eigen::LLT<Eigen::MatrixXd> end(innovation_cov(p, h));
      const Eigen::RowVectorXd gain = end.solve(innovation_cov(p, u, h, q).transpose()).transpose();
      out.block(i, gap * p, 1, p) = gain;
      left -= gain * transition(p, h);
    }
    if (gap > 0) out.block(i, (gap - 1) * p, 1, p) = left;
  }
  return out;
}

std::optional<Eigen::MatrixXd> ExactIWPPrior::residual_covariance(std::span<const double> xs, int q) const {
  const int p = order_;
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(support_.size());
  std::vector<Eigen::Index> free_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (xs[i] != origin_ && match(xs[i]) < 0) free_rows.push_back(i);
  }
  if (free_rows.empty()) return std::nullopt;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r : free_rows) {
    for (Eigen::Index c : free_rows) {
      const Eigen::Index gap = gap_of(xs[r]);
      if (gap_of(xs[c]) != gap) continue;
      const double base = left_point(gap);
      const double u = xs[r] - base;
      const double v = xs[c] - base;
      double cov = iwp_cov<double>(p, 1.0, u, v, q, q);
      if (gap < m) {
        const double h = support_[static_cast<std::size_t>(gap)] - base;
        const Eigen::LLT<Eigen::MatrixXd> end(innovation_cov(p, h));
        const Eigen::MatrixXd cu = innovation_cov(p, u, h, q);
        const Eigen::MatrixXd cv = innovation_cov(p, v, h, q);
        cov -= (cu * end.solve(cv.transpose()))(0, 0);
      }
      out(r, c) = cov;
    }
  }
  return out;
}

std::optional<Eigen::MatrixXd> ExactIWPPrior::covariance(std::span<const double> xs) const {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (xs[i] < origin_ || xs[i] > region_end_) throw InvalidArgument("ExactIWPPrior::covariance: x outside region");
    for (Eigen::Index j = 0; j <= i; ++j) {
      out(i, j) = out(j, i) = iwp_cov<double>(order_, 1.0, xs[i] - origin_, xs[j] - origin_, 0, 0);
    }
  }
  return out;
}

std::optional<Eigen::MatrixXd> ExactIWPPrior::cross_covariance(std::span<const double> xs) const {
  const int p = order_;
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(support_.size());
  Eigen::MatrixXd out(m * p, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (xs[j] < origin_ || xs[j] > region_end_) {
      throw InvalidArgument("ExactIWPPrior::cross_covariance: x outside region");
    }
    for (Eigen::Index l = 0; l < m; ++l) {
      for (int b = 0; b < p; ++b) {
        out(l * p + b, j) =
            iwp_cov<double>(p, 1.0, support_[static_cast<std::size_t>(l)] - origin_, xs[j] - origin_, b, 0);
      }
    }
  }
  return out;
}

}  // namespace ospline
