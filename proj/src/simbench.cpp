#include "ospline/simbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ospline/aghq.hpp"
#include "ospline/error.hpp"
#include "ospline/io.hpp"
#include "ospline/iwp.hpp"
#include "ospline/parallel.hpp"
#include "ospline/posterior.hpp"
#include "ospline/prior.hpp"

namespace ospline {

namespace {

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& field : split_csv_line(text)) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(field, &used);
      if (used != field.size() || v <= 0) throw std::invalid_argument(field);
      out.push_back(v);
    } catch (const std::exception&) {
      throw DataError("config key '" + key + "': expected a list of positive integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw DataError("config key '" + key + "': empty list");
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a number, got '" + text + "'");
  }
}

int parse_count(const std::string& key, const std::string& text, int min_value) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || v < min_value || v > 1e9) {
    throw DataError("config key '" + key + "': expected an integer >= " + std::to_string(min_value));
  }
  return static_cast<int>(v);
}

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  out.back() = b;
  return out;
}

void check_config(const ExperimentConfig& c) {
  if (!(c.region_end > c.region_start)) throw InvalidArgument("experiment: region must satisfy start < end");
  if (c.replications < 1 || c.grid_points < 1 || c.num_quad < 1 || c.samples < 0 || c.threads < 1) {
    throw InvalidArgument("experiment: counts must be positive");
  }
  for (int p : c.orders) {
    if (p < 1 || p > kMaxOrder) throw InvalidArgument("experiment: order out of range");
  }
}

ModelOptions gaussian_options(const ExperimentConfig& c, int p) {
  ModelOptions opts;
  opts.sigma_prior = prior_from_psd(PSDSpec(c.psd_h, p), c.psd_u, c.psd_alpha);
  opts.noise_sd = c.noise_sd;
  return opts;
}

}  // namespace

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ExperimentConfig default_config(std::string_view experiment, std::string_view profile) {
  if (profile != "ci" && profile != "full") throw InvalidArgument("unknown profile '" + std::string(profile) + "'");
  const bool full = profile == "full";
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  c.profile = std::string(profile);
  if (experiment == "corr") {
    c.orders = {1, 2, 3, 4};
    c.knots = {5, 10, 30, 100};
    c.region_start = 0.0;
    c.region_end = 15.0;
    c.grid_points = 500;
    c.anchor = 5.0;
  } else if (experiment == "bench") {
    c.orders = {3};
    c.knots = {10, 30, 50, 100};
    c.region_start = 0.0;
    c.region_end = 20.0;
    c.sizes = full ? std::vector<int>{50, 100, 200, 500, 1000} : std::vector<int>{50, 100, 200, 500};
    c.replications = 10;
    c.warmup = 1;
    c.num_quad = 10;
    c.samples = 3000;
    c.noise_sd = 1.0;
    c.psd_h = 5.0;
    c.psd_u = 3.0;
    c.psd_alpha = 0.01;
  } else if (experiment == "gmm") {
    c.orders = {3, 2};
    c.knots = {100};
    c.region_start = 0.0;
    c.region_end = 10.0;
    c.sizes = {100};
    c.replications = full ? 300 : 100;
    c.num_quad = 10;
    c.samples = 0;
    c.noise_sd = 0.1;
    c.psd_h = 1.0;
    c.psd_u = 1.0;
    c.psd_alpha = 0.5;
  } else {
    throw InvalidArgument("unknown experiment '" + std::string(experiment) + "' (expected corr, bench or gmm)");
  }
  return c;
}

void apply_config(ExperimentConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "orders") {
      c.orders = parse_int_list(key, value);
    } else if (key == "knots") {
      c.knots = parse_int_list(key, value);
    } else if (key == "sizes") {
      c.sizes = parse_int_list(key, value);
    } else if (key == "region") {
      const auto parts = split_csv_line(value);
      if (parts.size() != 2) throw DataError("config key 'region': expected 'start,end'");
      c.region_start = parse_number(key, parts[0]);
      c.region_end = parse_number(key, parts[1]);
      if (!(c.region_end > c.region_start)) throw DataError("config key 'region': start must be below end");
    } else if (key == "seed") {
      const double v = parse_number(key, value);
      if (v < 0 || v != std::floor(v) || v > 9.0e15) throw DataError("config key 'seed': expected a non-negative integer");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "replications") {
      c.replications = parse_count(key, value, 1);
    } else if (key == "warmup") {
      c.warmup = parse_count(key, value, 0);
    } else if (key == "grid_points") {
      c.grid_points = parse_count(key, value, 1);
    } else if (key == "anchor") {
      c.anchor = parse_number(key, value);
    } else if (key == "num_quad") {
      c.num_quad = parse_count(key, value, 1);
    } else if (key == "samples") {
      c.samples = parse_count(key, value, 0);
    } else if (key == "noise_sd") {
      c.noise_sd = parse_number(key, value);
      if (!(c.noise_sd > 0.0)) throw DataError("config key 'noise_sd': must be positive");
    } else if (key == "psd_h") {
      c.psd_h = parse_number(key, value);
      if (!(c.psd_h > 0.0)) throw DataError("config key 'psd_h': must be positive");
    } else if (key == "psd_u") {
      c.psd_u = parse_number(key, value);
      if (!(c.psd_u > 0.0)) throw DataError("config key 'psd_u': must be positive");
    } else if (key == "psd_alpha") {
      c.psd_alpha = parse_number(key, value);
      if (!(c.psd_alpha > 0.0 && c.psd_alpha < 1.0)) throw DataError("config key 'psd_alpha': must lie in (0, 1)");
    } else if (key == "threads") {
      c.threads = parse_count(key, value, 1);
    } else {
      throw DataError("unknown config key '" + key + "'");
    }
  }
}

std::string config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment=" << c.experiment << "\nprofile=" << c.profile << "\norders=" << join(c.orders)
      << "\nknots=" << join(c.knots) << "\nregion=" << format_double(c.region_start) << ','
      << format_double(c.region_end) << "\nsizes=" << join(c.sizes) << "\nseed=" << c.seed
      << "\nreplications=" << c.replications << "\nwarmup=" << c.warmup << "\ngrid_points=" << c.grid_points
      << "\nanchor=" << format_double(c.anchor) << "\nnum_quad=" << c.num_quad << "\nsamples=" << c.samples
      << "\nnoise_sd=" << format_double(c.noise_sd) << "\npsd_h=" << format_double(c.psd_h)
      << "\npsd_u=" << format_double(c.psd_u) << "\npsd_alpha=" << format_double(c.psd_alpha) << '\n';
  return out.str();
}

// ---------------------------------------------------------------- correlation

std::vector<CorrelationRow> run_correlation_study(const ExperimentConfig& config) {
  check_config(config);
  const double a = config.region_start;
  const double b = config.region_end;
  if (!(config.anchor > a && config.anchor <= b)) throw InvalidArgument("correlation study: anchor outside region");
  std::vector<double> xs;
  for (int j = 1; j <= config.grid_points; ++j) xs.push_back(a + (b - a) * j / config.grid_points);
  xs.back() = b;
  const double s = config.anchor;

  std::vector<CorrelationRow> rows;
  for (int p : config.orders) {
    for (int k : config.knots) {
      const OSplineBasis basis(p, KnotSet::equally_spaced(a, b, static_cast<std::size_t>(k)));
      const double exact_ss = iwp_cov<double>(p, 1.0, s - a, s - a, 0, 0);
      const double approx_ss = ospline_cov(basis, 1.0, s, s, 0, 0);
      for (int q = 0; q < p; ++q) {
        for (double x : xs) {
          CorrelationRow r;
          r.p = p;
          r.k = k;
          r.q = q;
          r.x = x;
          r.exact = iwp_cov<double>(p, 1.0, s - a, x - a, 0, q) /
                    std::sqrt(exact_ss * iwp_cov<double>(p, 1.0, x - a, x - a, q, q));
          r.approx = ospline_cov(basis, 1.0, s, x, 0, q) / std::sqrt(approx_ss * ospline_cov(basis, 1.0, x, x, q, q));
          rows.push_back(r);
        }
      }
    }
  }
  return rows;
}

void write_correlation_csv(std::ostream& out, const std::vector<CorrelationRow>& rows) {
  out << "p,k,q,x,exact_corr,approx_corr\n";
  for (const auto& r : rows) {
    out << r.p << ',' << r.k << ',' << r.q << ',' << format_double(r.x) << ',' << format_double(r.exact) << ','
        << format_double(r.approx) << '\n';
  }
}

double max_correlation_error(const std::vector<CorrelationRow>& rows, int p, int k, int q) {
  double worst = 0.0;
  for (const auto& r : rows) {
    if (r.p == p && r.k == k && (q < 0 || r.q == q)) worst = std::max(worst, std::abs(r.exact - r.approx));
  }
  return worst;
}

// ------------------------------------------------------------------ benchmark

RegressionData simulate_sine_data(int n, double region_start, double region_end, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("simulate_sine_data: n must be >= 2");
  RegressionData d;
  d.x = linspace(region_start, region_end, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double x : d.x) d.y.push_back(std::sqrt(3.0) * std::sin(x / 2.0) + noise(rng));
  return d;
}

std::vector<BenchCell> run_benchmark_study(const ExperimentConfig& config) {
  check_config(config);
  if (config.orders.size() != 1) throw InvalidArgument("benchmark: exactly one order expected");
  const int p = config.orders.front();
  const double a = config.region_start;
  const double b = config.region_end;
  const ModelOptions opts = gaussian_options(config, p);
  AghqOptions aghq;
  aghq.num_quad = config.num_quad;
  aghq.samples = config.samples;
  aghq.threads = 1;
  aghq.condition_numbers = false;

  using Clock = std::chrono::steady_clock;
  std::vector<BenchCell> cells;
  for (int n : config.sizes) {
    const RegressionData data = simulate_sine_data(n, a, b, derived_seed(config.seed, static_cast<std::uint64_t>(n)));
    aghq.seed = derived_seed(config.seed, 1000000u + static_cast<std::uint64_t>(n));
    std::vector<int> ks = config.knots;
    ks.push_back(0);
    for (int k : ks) {
      BenchCell cell;
      cell.n = n;
      cell.k = k;
      cell.method = k == 0 ? "exact" : "ospline";
      PosteriorFit last;
      try {
        for (int rep = 0; rep < config.warmup + config.replications; ++rep) {
          const auto start = Clock::now();
          const LatentModel model =
              k == 0 ? make_exact_model(p, a, b, data.x, data.y, Family::gaussian, opts)
                     : make_ospline_model(p, static_cast<std::size_t>(k), a, b, data.x, data.y, Family::gaussian, opts);
          last = aghq_fit(model, aghq);
          const double secs = std::chrono::duration<double>(Clock::now() - start).count();
          if (rep >= config.warmup) cell.seconds.push_back(secs);
        }
        cell.log10_condition = std::log10(max_condition_number(last));
      } catch (const NumericError& e) {
        cell.failed = true;
        cell.failure = e.what();
        cell.log10_condition = std::numeric_limits<double>::infinity();
        cell.seconds.clear();
      }
      cell.median_seconds = median_of(cell.seconds);
      cells.push_back(std::move(cell));
    }
  }

  // Normalize by the smallest-k, smallest-n O-spline cell.
  const int k_ref = *std::min_element(config.knots.begin(), config.knots.end());
  const int n_ref = *std::min_element(config.sizes.begin(), config.sizes.end());
  double ref = std::numeric_limits<double>::quiet_NaN();
  for (const auto& c : cells) {
    if (c.method == "ospline" && c.k == k_ref && c.n == n_ref && !c.seconds.empty()) {
      double sum = 0.0;
      for (double s : c.seconds) sum += s;
      ref = sum / static_cast<double>(c.seconds.size());
    }
  }
  for (auto& c : cells) {
    if (c.seconds.empty()) {
      c.mean_relative = c.sd_relative = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double s : c.seconds) sum += s / ref;
    c.mean_relative = sum / static_cast<double>(c.seconds.size());
    double ss = 0.0;
    for (double s : c.seconds) ss += (s / ref - c.mean_relative) * (s / ref - c.mean_relative);
    c.sd_relative = c.seconds.size() > 1 ? std::sqrt(ss / static_cast<double>(c.seconds.size() - 1)) : 0.0;
  }
  return cells;
}

void write_benchmark_conditioning_csv(std::ostream& out, const std::vector<BenchCell>& cells) {
  out << "n,method,k,log10_condition,status\n";
  for (const auto& c : cells) {
    out << c.n << ',' << c.method << ',' << c.k << ',' << (c.failed ? std::string("--") : format_double(c.log10_condition))
        << ',' << (c.failed ? "failed" : "ok") << '\n';
  }
}

void write_benchmark_timing_csv(std::ostream& out, const std::vector<BenchCell>& cells) {
  out << "n,method,k,median_seconds,mean_relative,sd_relative\n";
  for (const auto& c : cells) {
    if (c.failed) {
      out << c.n << ',' << c.method << ',' << c.k << ",--,--,--\n";
      continue;
    }
    out << c.n << ',' << c.method << ',' << c.k << ',' << format_double(c.median_seconds) << ','
        << format_double(c.mean_relative) << ',' << format_double(c.sd_relative) << '\n';
  }
}

// ------------------------------------------------------------------ mixture

double MixtureTruth::value(double x, int derivative) const {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double z = x - means[i];
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    double d = phi;
    if (derivative == 1) d = -z * phi;
    if (derivative == 2) d = (z * z - 1.0) * phi;
    if (derivative > 2 || derivative < 0) throw InvalidArgument("MixtureTruth: derivative must be 0, 1 or 2");
    total += weights[i] * d;
  }
  if (derivative == 0) total -= center;
  return total / scale;
}

MixtureTruth draw_mixture_truth(const std::vector<double>& xs, std::uint64_t seed) {
  if (xs.size() < 2) throw InvalidArgument("draw_mixture_truth: need at least two locations");
  MixtureTruth t;
  t.weights = {0.6, 0.3, 0.1};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mu(5.0, 2.0);
  for (int i = 0; i < 3; ++i) t.means.push_back(mu(rng));
  std::vector<double> raw;
  for (double x : xs) raw.push_back(t.value(x, 0));
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(raw.size());
  double ss = 0.0;
  for (double v : raw) ss += (v - mean) * (v - mean);
  t.center = mean;
  t.scale = std::sqrt(ss / static_cast<double>(raw.size() - 1));
  return t;
}

namespace {

// Posterior moments of g^{(q)} where q may equal p (a.e. derivative through
// the piecewise-constant test functions).
PosteriorMoments derivative_moments(const PosteriorFit& fit, const std::vector<double>& xs, int q) {
  if (q < fit.order()) return posterior_moments(fit, xs, q);
  const auto* prior = dynamic_cast<const OSplinePrior*>(fit.smooth.get());
  if (prior == nullptr || q != fit.order()) throw InvalidArgument("derivative_moments: needs an O-spline fit and q <= p");
  const OSplineBasis& basis = prior->basis();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), fit.layout.core());
  std::vector<double> vals(basis.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    basis.eval_all(xs[i], q, vals);
    for (std::size_t j = 0; j < vals.size(); ++j) rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[j];
  }
  // Polynomial terms of degree < p vanish after p derivatives.
  return linear_moments(fit, rows);
}

std::string method_name(int p) { return "ospline_p" + std::to_string(p); }

}  // namespace

RmseReport run_gmm_study(const ExperimentConfig& config, std::vector<CurveRow>* first_curves) {
  check_config(config);
  if (config.knots.size() != 1 || config.sizes.size() != 1) {
    throw InvalidArgument("gmm study: exactly one knot count and one sample size expected");
  }
  const int k = config.knots.front();
  const int n = config.sizes.front();
  const std::vector<double> xs = linspace(config.region_start, config.region_end, n);
  const auto reps = static_cast<std::size_t>(config.replications);
  const std::size_t methods = config.orders.size();

  std::vector<RmseRow> rows(reps * methods);
  std::vector<CurveRow> curves;
  parallel_for(reps, config.threads, [&](std::size_t r) {
    const MixtureTruth truth = draw_mixture_truth(xs, derived_seed(config.seed, r));
    std::mt19937_64 rng(derived_seed(config.seed, 0x100000000ULL + r));
    std::normal_distribution<double> noise(0.0, config.noise_sd);
    std::vector<double> y;
    for (double x : xs) y.push_back(truth.value(x, 0) + noise(rng));

    for (std::size_t mi = 0; mi < methods; ++mi) {
      const int p = config.orders[mi];
      const LatentModel model = make_ospline_model(p, static_cast<std::size_t>(k), config.region_start,
                                                   config.region_end, xs, y, Family::gaussian,
                                                   gaussian_options(config, p));
      AghqOptions aghq;
      aghq.num_quad = config.num_quad;
      aghq.samples = config.samples;
      aghq.seed = derived_seed(config.seed, 0x200000000ULL + r);
      aghq.condition_numbers = false;
      const PosteriorFit fit = aghq_fit(model, aghq);
      RmseRow& row = rows[r * methods + mi];
      row.replication = static_cast<int>(r);
      row.method = method_name(p);
      for (int q = 0; q <= 2; ++q) {
        const PosteriorMoments mom = derivative_moments(fit, xs, q);
        double ss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          const double e = mom.mean(static_cast<Eigen::Index>(i)) - truth.value(xs[i], q);
          ss += e * e;
        }
        row.rmse[static_cast<std::size_t>(q)] = std::sqrt(ss / static_cast<double>(xs.size()));
        if (r == 0) {
          for (std::size_t i = 0; i < xs.size(); ++i) {
            curves.push_back({row.method, q, xs[i], truth.value(xs[i], q), mom.mean(static_cast<Eigen::Index>(i)),
                              mom.sd(static_cast<Eigen::Index>(i))});
          }
        }
      }
    }
  });

  RmseReport report;
  report.reference = method_name(config.orders.front());
  for (std::size_t mi = 0; mi < methods; ++mi) {
    std::array<double, 3> med{};
    for (std::size_t q = 0; q < 3; ++q) {
      std::vector<double> v;
      for (std::size_t r = 0; r < reps; ++r) v.push_back(rows[r * methods + mi].rmse[q]);
      med[q] = median_of(v);
    }
    report.medians[method_name(config.orders[mi])] = med;
  }
  const auto ref = report.medians.at(report.reference);
  for (auto& row : rows) {
    for (std::size_t q = 0; q < 3; ++q) row.ratio[q] = row.rmse[q] / ref[q];
  }
  report.rows = std::move(rows);
  if (first_curves) *first_curves = std::move(curves);
  return report;
}

void write_rmse_csv(std::ostream& out, const RmseReport& report) {
  out << "replication,method,rmse_g,rmse_g1,rmse_g2,ratio_g,ratio_g1,ratio_g2\n";
  for (const auto& r : report.rows) {
    out << r.replication << ',' << r.method;
    for (double v : r.rmse) out << ',' << format_double(v);
    for (double v : r.ratio) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "method,q,x,truth,mean,sd\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.q << ',' << format_double(r.x) << ',' << format_double(r.truth) << ','
        << format_double(r.mean) << ',' << format_double(r.sd) << '\n';
  }
}

// ------------------------------------------------------------------- outputs

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write output file '" + path.string() + "'");
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir + "': " + ec.message());
  const fs::path dir(out_dir);

  nlohmann::ordered_json manifest;
  manifest["experiment"] = config.experiment;
  manifest["profile"] = config.profile;
  manifest["seed"] = config.seed;
  manifest["config_hash"] = hex64(fnv1a64(config_text(config)));
  manifest["version"] = OSPLINE_VERSION;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  std::vector<std::string> outputs;
  std::vector<std::string> timing_outputs;

  if (config.experiment == "corr") {
    const auto rows = run_correlation_study(config);
    auto out = open_output(dir / "corr.csv");
    write_correlation_csv(out, rows);
    outputs.push_back("corr.csv");
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (int p : config.orders) {
      for (int k : config.knots) {
        summary.push_back({{"p", p}, {"k", k}, {"max_abs_error", format_double(max_correlation_error(rows, p, k))}});
      }
    }
    manifest["summary"] = summary;
  } else if (config.experiment == "bench") {
    const auto cells = run_benchmark_study(config);
    {
      auto out = open_output(dir / "bench_conditioning.csv");
      write_benchmark_conditioning_csv(out, cells);
    }
    {
      auto out = open_output(dir / "bench_timing.csv");
      write_benchmark_timing_csv(out, cells);
    }
    outputs.push_back("bench_conditioning.csv");
    timing_outputs.push_back("bench_timing.csv");
  } else if (config.experiment == "gmm") {
    std::vector<CurveRow> curves;
    const RmseReport report = run_gmm_study(config, &curves);
    {
      auto out = open_output(dir / "gmm_rmse.csv");
      write_rmse_csv(out, report);
    }
    {
      auto out = open_output(dir / "gmm_curves.csv");
      write_curve_csv(out, curves);
    }
    outputs.push_back("gmm_rmse.csv");
    outputs.push_back("gmm_curves.csv");
    nlohmann::ordered_json medians;
    for (const auto& [method, med] : report.medians) {
      medians[method] = {format_double(med[0]), format_double(med[1]), format_double(med[2])};
    }
    manifest["reference"] = report.reference;
    manifest["median_rmse"] = medians;
  } else {
    throw InvalidArgument("unknown experiment '" + config.experiment + "' (expected corr, bench or gmm)");
  }

  manifest["config"] = config_text(config);
  manifest["outputs"] = outputs;
  manifest["timing_outputs"] = timing_outputs;
  {
    auto out = open_output(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  outputs.insert(outputs.end(), timing_outputs.begin(), timing_outputs.end());
  outputs.push_back("manifest.json");
  return outputs;
}

}  // namespace ospline
