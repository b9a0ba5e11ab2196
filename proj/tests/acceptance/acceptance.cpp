// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ospline/aghq.hpp"
#include "ospline/basis.hpp"
#include "ospline/dense_gp.hpp"
#include "ospline/iwp.hpp"
#include "ospline/knots.hpp"
#include "ospline/laplace.hpp"
#include "ospline/model.hpp"
#include "ospline/posterior.hpp"
#include "ospline/prior.hpp"
#include "ospline/quadrature.hpp"
#include "ospline/simbench.hpp"

using namespace ospline;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- 1. bound

Outcome bound_check() {
  double worst = 0.0;
  std::string where;
  bool ok = true;
  for (int p = 1; p <= 3; ++p) {
    for (int k : {5, 10, 20, 40}) {
      const double err = sup_cov_error(p, k, 0.0, 1.0, 20 * k);
      const double scaled = err * k;
      if (scaled > worst) {
        worst = scaled;
        where = "p=" + std::to_string(p) + " k=" + std::to_string(k);
      }
      if (err > 2.0 / k + 1e-9) ok = false;
    }
  }
  return {ok, "max sup_err * k = " + fmt(worst) + " at " + where + " (bound 2)"};
}

// ----------------------------------------------------------------- 2. rate

Outcome rate_check() {
  const int density = 800;
  double lo = INFINITY;
  double hi = 0.0;
  std::vector<std::string> outside;
  for (int p = 1; p <= 4; ++p) {
    for (int q1 = 0; q1 < p; ++q1) {
      for (int q2 = q1; q2 < p; ++q2) {
        for (int k : {10, 20}) {
          const double ratio =
              sup_cov_error(p, k, 0.0, 1.0, density, q1, q2) / sup_cov_error(p, 2 * k, 0.0, 1.0, density, q1, q2);
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
          if (ratio < 1.5 || ratio > 2.5) {
            outside.push_back("p=" + std::to_string(p) + " q=(" + std::to_string(q1) + "," + std::to_string(q2) +
                              ") k=" + std::to_string(k) + ": " + fmt(ratio));
          }
        }
      }
    }
  }
  std::string detail = "ratios in [" + fmt(lo) + ", " + fmt(hi) + "]";
  if (!outside.empty()) {
    detail += "; outside [1.5, 2.5]:";
    for (std::size_t i = 0; i < outside.size() && i < 6; ++i) detail += " {" + outside[i] + "}";
    if (outside.size() > 6) detail += " +" + std::to_string(outside.size() - 6) + " more";
  }
  return {outside.empty(), detail};
}

// ---------------------------------------------------------- 3. correlation

Outcome correlation_check() {
  const auto rows = run_correlation_study(default_config("corr", "ci"));
  double worst30 = 0.0;
  double worst100 = 0.0;
  std::string detail;
  for (int p = 1; p <= 4; ++p) {
    const double e30 = max_correlation_error(rows, p, 30);
    const double e100 = max_correlation_error(rows, p, 100);
    worst30 = std::max(worst30, e30);
    worst100 = std::max(worst100, e100);
    detail += " p" + std::to_string(p) + ":(k30 " + fmt(e30) + ", k100 " + fmt(e100) + ")";
  }
  return {worst100 <= 0.01 && worst30 <= 0.05, "max error k=100 " + fmt(worst100) + " (<= 0.01), k=30 " + fmt(worst30) +
                                                   " (<= 0.05);" + detail};
}

// ------------------------------------------------------------------ 4. psd

Outcome psd_check() {
  double worst = 0.0;
  for (int p = 1; p <= 5; ++p) {
    for (double h : {0.5, 1.0, 5.0}) {
      for (double sigma : {0.3, 1.0, 3.0}) {
        const double target = sigma_to_psd(PSDSpec(h, p), sigma);
        for (double x : {0.5, 3.0, 10.0}) {
          const double got = psd_conditional_check(IWPKernel(p, sigma), x, h);
          worst = std::max(worst, std::abs(got - target) / target);
        }
      }
    }
  }
  return {worst <= 1e-7, "max relative difference " + fmt(worst) + " over 135 cases"};
}

// ------------------------------------------------------ 5. conjugate oracle

std::vector<double> region_grid(double a, double b, int count) {
  std::vector<double> xs;
  for (int i = 0; i <= count; ++i) xs.push_back(a + (b - a) * i / count);
  return xs;
}

Outcome conjugate_check() {
  const int p = 3;
  const RegressionData data = simulate_sine_data(50, 0.0, 20.0, 505);
  const std::vector<double> tau{10.0, 3.0, 1.0};
  ModelOptions o;
  o.noise_sd = 1.0;
  o.poly_prior_sd = tau;
  const LatentModel m = make_ospline_model(p, 30, 0.0, 20.0, data.x, data.y, Family::gaussian, o);
  const Hyper h{0.8};
  const PosteriorFit fit = fixed_hyper_fit(m, h, 0, 1);
  const OSplineBasis basis(p, KnotSet::equally_spaced(0.0, 20.0, 30));
  const CrossCovariance cov = [&](double x1, int q1, double x2, int q2) {
    return ospline_cov(basis, h.sigma, x1, x2, q1, q2);
  };
  const std::vector<double> grid = region_grid(0.0, 20.0, 200);
  double worst = 0.0;
  for (int q = 0; q < 3; ++q) {
    std::vector<PredictionPoint> at;
    for (double x : grid) at.push_back({x, q});
    const GpPrediction oracle = dense_gp_fit(cov, 0.0, data.x, data.y, 1.0, tau, at);
    const PosteriorMoments mom = posterior_moments(fit, grid, q);
    worst = std::max(worst, (mom.mean - oracle.mean).cwiseAbs().maxCoeff());
    worst = std::max(worst, (mom.sd - oracle.sd).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "max |difference| in mean/SD over q=0,1,2: " + fmt(worst)};
}

// ------------------------------------------------- 6. exact vs O-spline fits

Outcome comparator_check() {
  const int p = 3;
  const RegressionData data = simulate_sine_data(100, 0.0, 20.0, 606);
  ModelOptions o;
  o.noise_sd = 1.0;
  o.sigma_prior = prior_from_psd(PSDSpec(5.0, p), 3.0, 0.01);
  AghqOptions opt;
  opt.samples = 0;
  opt.condition_numbers = false;
  const PosteriorFit exact = aghq_fit(make_exact_model(p, 0.0, 20.0, data.x, data.y, Family::gaussian, o), opt);
  const std::vector<double> grid = region_grid(0.0, 20.0, 200);
  std::vector<PosteriorMoments> ref;
  for (int q = 0; q < 3; ++q) ref.push_back(posterior_moments(exact, grid, q));

  bool ok = true;
  std::string detail;
  for (int k : {10, 30, 50, 100}) {
    const PosteriorFit os =
        aghq_fit(make_ospline_model(p, static_cast<std::size_t>(k), 0.0, 20.0, data.x, data.y, Family::gaussian, o), opt);
    double worst_z = 0.0;
    double sd_rel = 0.0;
    for (int q = 0; q < 3; ++q) {
      const PosteriorMoments mom = posterior_moments(os, grid, q);
      const auto& r = ref[static_cast<std::size_t>(q)];
      for (Eigen::Index i = 0; i < r.mean.size(); ++i) {
        worst_z = std::max(worst_z, std::abs(mom.mean(i) - r.mean(i)) / r.sd(i));
        if (q == 2) sd_rel = std::max(sd_rel, std::abs(mom.sd(i) - r.sd(i)) / r.sd(i));
      }
    }
    if (worst_z >= 3.0) ok = false;
    if (k >= 30 && sd_rel > 0.15) ok = false;
    detail += " k=" + std::to_string(k) + ": max |dmean|/sd " + fmt(worst_z) + ", g'' sd rel " + fmt(sd_rel) + ";";
  }
  return {ok, detail.substr(1)};
}

// --------------------------------------------------------- 7. benchmark

Outcome benchmark_check() {
  const auto cells = run_benchmark_study(default_config("bench", "ci"));
  std::map<int, const BenchCell*> exact;
  std::map<int, std::vector<const BenchCell*>> os;
  for (const auto& c : cells) {
    if (c.method == "exact") {
      exact[c.n] = &c;
    } else {
      os[c.n].push_back(&c);
    }
  }
  bool ok = true;
  std::string detail;
  double prev = -INFINITY;
  for (const auto& [n, e] : exact) {
    double os_cond = 0.0;
    double os_slowest = 0.0;
    for (const BenchCell* c : os[n]) {
      if (c->failed) ok = false;
      os_cond = std::max(os_cond, c->log10_condition);
      os_slowest = std::max(os_slowest, c->median_seconds);
    }
    // A failed exact cell is infinitely ill-conditioned and never finishes.
    const double e_cond = e->failed ? INFINITY : e->log10_condition;
    const double e_time = e->failed ? INFINITY : e->median_seconds;
    if (!(os_cond < e_cond)) ok = false;
    if (n >= 100 && !(os_slowest < e_time)) ok = false;
    if (!(e_cond > prev)) ok = false;
    prev = e_cond;
    detail += " n=" + std::to_string(n) + ": log10 CN O-spline<=" + fmt(os_cond) + " exact " +
              (e->failed ? std::string("--") : fmt(e_cond)) + ", time exact/slowest O-spline " +
              (e->failed ? std::string("--") : fmt(e_time / os_slowest)) + ";";
  }
  return {ok, detail.substr(1)};
}

// ------------------------------------------------- 8. Poisson nested oracle

// log of the integral of exp(log_joint) over the latent vector by a tensor
// Gauss-Hermite rule in coordinates whitened by a widened Laplace covariance.
double brute_log_integral(const LatentModel& m, const Hyper& h, int nodes) {
  const GaussianApprox g = newton_mode(m, h);
  const Eigen::Index d = g.dim();
  const Eigen::MatrixXd cov = g.precision().inverse();
  const Eigen::MatrixXd a = 1.5 * Eigen::MatrixXd(cov.llt().matrixL());
  const GaussHermiteRule rule = gauss_hermite(nodes);
  const double top = log_joint(m, g.mode, h);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  double sum = 0.0;
  while (true) {
    Eigen::VectorXd z(d);
    double w = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      z(j) = rule.nodes(idx[static_cast<std::size_t>(j)]);
      w *= rule.weights(idx[static_cast<std::size_t>(j)]);
    }
    sum += w * std::exp(log_joint(m, g.mode + a * z, h) - top + 0.5 * z.squaredNorm());
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] == nodes) idx[j++] = 0;
    if (j == idx.size()) break;
  }
  return top + std::log(sum) + a.diagonal().array().log().sum() + 0.5 * static_cast<double>(d) * kLog2Pi;
}

Outcome poisson_check() {
  const std::vector<double> xs{0.15, 0.4, 0.65, 0.9};
  const std::vector<double> ys{3.0, 7.0, 5.0, 12.0};
  const LatentModel m = make_ospline_model(1, 2, 0.0, 1.0, xs, ys, Family::poisson, ModelOptions{});
  AghqOptions opt;
  opt.samples = 0;
  const PosteriorFit fit = aghq_fit(m, opt);
  // Same grid, with the inner latent integral done by brute force.
  std::vector<double> log_w;
  for (const auto& pt : fit.points) {
    log_w.push_back(std::log(pt.weight) - pt.log_laplace + brute_log_integral(m, pt.hyper, 40));
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (double v : log_w) total += std::exp(v - top);
  double tv = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) tv += std::abs(std::exp(log_w[i] - top) / total - fit.points[i].weight);
  tv *= 0.5;
  return {tv <= 1e-2, "total variation on the " + std::to_string(fit.points.size()) + "-point grid " + fmt(tv)};
}

// --------------------------------------------------------------- 9. GMM

Outcome gmm_check() {
  const ExperimentConfig c = default_config("gmm", "ci");
  const RmseReport r = run_gmm_study(c);
  const auto& p3 = r.medians.at("ospline_p3");
  const auto& p2 = r.medians.at("ospline_p2");
  const double rel_g = std::abs(p2[0] - p3[0]) / p3[0];
  const bool ok = p3[2] < p2[2] && rel_g < 0.25;
  return {ok, std::to_string(c.replications) + " replications: median rMSE g'' p3 " + fmt(p3[2]) + " vs p2 " +
                  fmt(p2[2]) + "; median rMSE g p3 " + fmt(p3[0]) + " vs p2 " + fmt(p2[0]) + " (relative " +
                  fmt(rel_g) + ")"};
}

// -------------------------------------------------------- 10. determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism_check() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ospline_acceptance_determinism";
  fs::remove_all(root);
  std::vector<ExperimentConfig> configs{default_config("corr", "ci"), default_config("gmm", "ci"),
                                        default_config("bench", "ci")};
  // Timing repetitions do not touch the deterministic outputs.
  configs[2].replications = 1;
  configs[2].warmup = 0;
  configs[1].threads = 4;
  bool ok = true;
  std::string detail;
  for (const auto& c : configs) {
    const auto files = run_experiment(c, (root / (c.experiment + "_a")).string());
    run_experiment(c, (root / (c.experiment + "_b")).string());
    int compared = 0;
    for (const auto& f : files) {
      if (f == "bench_timing.csv") continue;
      ++compared;
      if (slurp(root / (c.experiment + "_a") / f) != slurp(root / (c.experiment + "_b") / f)) {
        ok = false;
        detail += " " + c.experiment + "/" + f + " differs;";
      }
    }
    detail += " " + c.experiment + ": " + std::to_string(compared) + " files;";
  }
  fs::remove_all(root);
  return {ok, detail.substr(1)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "covariance error bound 2/k", bound_check},
      {2, "linear convergence rate under knot doubling", rate_check},
      {3, "correlation curves at k = 30 and k = 100", correlation_check},
      {4, "conditional SD equals the PSD formula", psd_check},
      {5, "fixed-theta fit equals dense GP conditioning", conjugate_check},
      {6, "O-spline posteriors agree with the exact comparator", comparator_check},
      {7, "runtime and conditioning orderings", benchmark_check},
      {8, "Poisson hyperparameter posterior vs nested quadrature", poisson_check},
      {9, "mixture study: derivative rMSE improves with order", gmm_check},
      {10, "byte-identical reruns", determinism_check},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                out.detail.c_str());
    std::fflush(stdout);
    failures += !out.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
