#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ospline {

/// Settings for one scripted experiment. Fields not used by an experiment
/// are ignored by it.
struct ExperimentConfig {
  std::string experiment;
  std::string profile = "ci";
  std::vector<int> orders;
  std::vector<int> knots;
  double region_start = 0.0;
  double region_end = 1.0;
  std::vector<int> sizes;
  std::uint64_t seed = 20231;
  int replications = 1;
  int warmup = 1;
  int grid_points = 500;
  double anchor = 5.0;
  int num_quad = 10;
  int samples = 3000;
  double noise_sd = 1.0;
  /// Prior P(sigma(psd_h) > psd_u) = psd_alpha on the predictive SD.
  double psd_h = 1.0;
  double psd_u = 1.0;
  double psd_alpha = 0.5;
  int threads = 1;
};

/// Defaults for corr | bench | gmm under profile ci | full.
ExperimentConfig default_config(std::string_view experiment, std::string_view profile);

/// Overrides fields from "key = value" pairs. Unknown keys and malformed
/// values raise DataError naming the key.
void apply_config(ExperimentConfig& config, const std::map<std::string, std::string>& values);

/// Canonical text of the config; hashed into manifests.
std::string config_text(const ExperimentConfig& config);

// ---------------------------------------------------------------- correlation

struct CorrelationRow {
  int p = 0;
  int k = 0;
  int q = 0;
  double x = 0.0;
  double exact = 0.0;
  double approx = 0.0;
};

/// Correlation between g(anchor) and g^{(q)}(x) for q = 0..p-1 under the
/// exact process and its O-spline approximation (sigma = 1, no polynomial
/// part), on grid_points uniform locations x_j = a + j (b - a) / grid_points,
/// j = 1..grid_points.
std::vector<CorrelationRow> run_correlation_study(const ExperimentConfig& config);

void write_correlation_csv(std::ostream& out, const std::vector<CorrelationRow>& rows);

/// Largest |exact - approx| over the rows matching (p, k, q); q = -1 matches
/// every q.
double max_correlation_error(const std::vector<CorrelationRow>& rows, int p, int k, int q = -1);

// ------------------------------------------------------------------ benchmark

/// y = sqrt(3) sin(x / 2) + N(0, 1) at n equally spaced points on
/// [region_start, region_end], endpoints included.
struct RegressionData {
  std::vector<double> x;
  std::vector<double> y;
};
RegressionData simulate_sine_data(int n, double region_start, double region_end, std::uint64_t seed);

struct BenchCell {
  int n = 0;
  /// "ospline" or "exact".
  std::string method;
  /// Knot count (0 for the exact comparator).
  int k = 0;
  std::vector<double> seconds;
  double median_seconds = 0.0;
  double mean_relative = 0.0;
  double sd_relative = 0.0;
  /// log10 of the largest condition number over the quadrature points;
  /// +inf when the method failed.
  double log10_condition = 0.0;
  bool failed = false;
  std::string failure;
};

/// Times aghq fits (model construction included) for every (n, method) cell.
/// Relative runtimes are normalized by the mean of the (smallest k, smallest n)
/// O-spline cell.
std::vector<BenchCell> run_benchmark_study(const ExperimentConfig& config);

/// Deterministic columns only: n, method, k, log10_condition, status.
void write_benchmark_conditioning_csv(std::ostream& out, const std::vector<BenchCell>& cells);
/// Timing columns: n, method, k, median_seconds, mean_relative, sd_relative.
void write_benchmark_timing_csv(std::ostream& out, const std::vector<BenchCell>& cells);

// ------------------------------------------------------------------ mixture

/// Standardized mixture-of-normals truth: g = (m(x) - center) / scale with
/// m(x) = sum_i weight_i phi(x - mu_i).
struct MixtureTruth {
  std::vector<double> weights;
  std::vector<double> means;
  double center = 0.0;
  double scale = 1.0;

  double value(double x, int derivative = 0) const;
};

/// Draws means from N(5, 2^2) with weights {0.6, 0.3, 0.1} and standardizes
/// so that the sample variance (n - 1 denominator) over xs is one.
MixtureTruth draw_mixture_truth(const std::vector<double>& xs, std::uint64_t seed);

struct RmseRow {
  int replication = 0;
  /// "ospline_p3" or "ospline_p2".
  std::string method;
  /// rMSE for g, g', g''.
  std::array<double, 3> rmse{};
  /// rMSE divided by the reference method's median.
  std::array<double, 3> ratio{};
};

struct RmseReport {
  std::string reference = "ospline_p3";
  std::vector<RmseRow> rows;
  /// Median rMSE per method for g, g', g''.
  std::map<std::string, std::array<double, 3>> medians;
};

/// Posterior-mean curves of the first replication, one row per (method, q, x).
struct CurveRow {
  std::string method;
  int q = 0;
  double x = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

RmseReport run_gmm_study(const ExperimentConfig& config, std::vector<CurveRow>* first_curves = nullptr);

void write_rmse_csv(std::ostream& out, const RmseReport& report);
void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);

// ------------------------------------------------------------------- outputs

/// Runs the configured experiment into out_dir and writes manifest.json.
/// Returns the written file names (relative to out_dir).
std::vector<std::string> run_experiment(const ExperimentConfig& config, const std::string& out_dir);

/// Seed for replication r derived from the master seed.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ospline
