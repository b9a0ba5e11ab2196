#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ospline/aghq.hpp"
#include "ospline/error.hpp"
#include "ospline/io.hpp"
#include "ospline/iwp.hpp"
#include "ospline/model.hpp"
#include "ospline/posterior.hpp"
#include "ospline/prior.hpp"
#include "ospline/simbench.hpp"

namespace ospline::cli {

namespace {

namespace fs = std::filesystem;

std::vector<int> parse_ints(const std::string& flag, const std::string& text) {
  std::vector<int> out;
  for (const auto& field : split_csv_line(text)) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InvalidArgument(flag + ": expected comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(flag + ": empty list");
  return out;
}

std::pair<double, double> parse_region(const std::string& text) {
  const auto parts = split_csv_line(text);
  if (parts.size() != 2) throw InvalidArgument("--region: expected 'start,end'");
  try {
    const double a = std::stod(parts[0]);
    const double b = std::stod(parts[1]);
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::exception&) {
    throw InvalidArgument("--region: expected two finite numbers with start < end, got '" + text + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_curve(const fs::path& path, const PosteriorCurve& c) {
  auto out = open_out(path);
  out << "x,q,mean,sd,lower,upper\n";
  for (std::size_t i = 0; i < c.xs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_double(c.xs[i]) << ',' << c.q << ',' << format_double(c.mean(r)) << ',' << format_double(c.sd(r))
        << ',' << format_double(c.lower(r)) << ',' << format_double(c.upper(r)) << '\n';
  }
}

ExponentialPrior sigma_prior_from(const FitArgs& a) {
  const PSDSpec spec(a.psd_h, a.order);
  const bool tail = a.psd_u || a.psd_alpha;
  if (a.psd_median && tail) throw InvalidArgument("give either --psd-median or --psd-u/--psd-alpha, not both");
  if (a.psd_median) return prior_from_psd(spec, *a.psd_median, 0.5);
  if (!a.psd_u || !a.psd_alpha) throw InvalidArgument("the smoothing prior needs --psd-u and --psd-alpha (or --psd-median)");
  return prior_from_psd(spec, *a.psd_u, *a.psd_alpha);
}

}  // namespace

void run_fit(const FitArgs& a, std::ostream& log) {
  if (a.order < 1 || a.order > kMaxOrder) throw InvalidArgument("--order must lie in 1.." + std::to_string(kMaxOrder));
  if (a.knots < 1) throw InvalidArgument("--knots must be positive");
  const std::vector<int> derivs = parse_ints("--deriv", a.deriv);
  for (int q : derivs) {
    if (q < 0 || q >= a.order) {
      throw InvalidArgument("--deriv " + std::to_string(q) + ": derivative order must be below --order " +
                            std::to_string(a.order));
    }
  }
  if (a.grid_points < 2) throw InvalidArgument("--grid-points must be >= 2");
  const Family family = parse_family(a.family);
  ModelOptions opts;
  opts.sigma_prior = sigma_prior_from(a);
  if (a.poly_sd) opts.poly_prior_sd.assign(static_cast<std::size_t>(a.order), *a.poly_sd);
  if (family == Family::gaussian) {
    if (a.noise_sd) {
      opts.noise_sd = *a.noise_sd;
    } else {
      opts.family_prior = ExponentialPrior::from_median(a.noise_median);
    }
  } else if (a.noise_sd) {
    throw InvalidArgument("--noise-sd only applies to --family gaussian");
  }
  if (family == Family::poisson_overdispersed) opts.family_prior = ExponentialPrior::from_median(a.od_median);

  const DataTable table = DataTable::read_file(a.data);
  const std::vector<double> xs = table.numeric(a.x_column);
  const std::vector<double> ys = table.numeric(a.y_column);
  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  if (!a.region.empty()) {
    const auto [ra, rb] = parse_region(a.region);
    if (lo < ra || hi > rb) throw DataError("column '" + a.x_column + "' has values outside --region " + a.region);
    lo = ra;
    hi = rb;
  }
  if (!(hi > lo)) throw DataError("column '" + a.x_column + "' needs at least two distinct values");

  std::vector<DerivedEffect> derived;
  Eigen::MatrixXd fixed(static_cast<Eigen::Index>(xs.size()), 0);
  for (const auto& col : a.fixed) {
    const std::vector<std::string> values = table.text(col);
    std::vector<std::string> levels;
    const Eigen::MatrixXd block = sum_coded_design(values, &levels);
    const Eigen::Index first = fixed.cols();
    fixed.conservativeResize(Eigen::NoChange, first + block.cols());
    fixed.rightCols(block.cols()) = block;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) opts.fixed_names.push_back(col + "=" + levels[l]);
    derived.push_back({col + "=" + levels.back(), first, block.cols()});
  }
  opts.fixed_design = fixed;
  opts.fixed_prior_sd.assign(static_cast<std::size_t>(fixed.cols()), a.fixed_sd);

  const LatentModel model =
      make_ospline_model(a.order, static_cast<std::size_t>(a.knots), lo, hi, xs, ys, family, opts);
  AghqOptions aghq;
  aghq.num_quad = a.quad;
  aghq.samples = a.samples;
  aghq.seed = a.seed;
  aghq.threads = a.threads;
  log << "fitting " << family_name(family) << " model: n=" << xs.size() << " p=" << a.order << " k=" << a.knots
      << " quad=" << a.quad << " samples=" << a.samples << '\n';
  const PosteriorFit fit = aghq_fit(model, aghq);

  make_dir(a.out);
  const fs::path dir(a.out);
  std::vector<std::string> outputs;
  std::vector<double> grid(static_cast<std::size_t>(a.grid_points));
  for (int i = 0; i < a.grid_points; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (a.grid_points - 1);
  grid.back() = hi;

  for (int q : derivs) {
    const std::string name = "curve_q" + std::to_string(q) + ".csv";
    write_curve(dir / name, posterior_function(fit, grid, q, Transform::none, a.level));
    outputs.push_back(name);
  }
  if (a.exp_transform) {
    for (int q = 0; q <= std::min(1, a.order - 1); ++q) {
      const std::string name = "curve_exp_q" + std::to_string(q) + ".csv";
      write_curve(dir / name, posterior_function(fit, grid, q, Transform::exp, a.level));
      outputs.push_back(name);
    }
  }

  {
    auto out = open_out(dir / "hyper.csv");
    out << "point";
    for (const auto& n : fit.theta_names) out << ',' << n;
    out << ",sigma,family_sd,log_laplace,weight,condition_number\n";
    for (std::size_t j = 0; j < fit.points.size(); ++j) {
      const QuadPoint& p = fit.points[j];
      out << j;
      for (Eigen::Index d = 0; d < p.theta.size(); ++d) out << ',' << format_double(p.theta(d));
      out << ',' << format_double(p.hyper.sigma) << ','
          << (std::isnan(p.hyper.family_sd) ? std::string("") : format_double(p.hyper.family_sd)) << ','
          << format_double(p.log_laplace) << ',' << format_double(p.weight) << ',' << format_double(p.condition)
          << '\n';
    }
    outputs.push_back("hyper.csv");
  }

  if (fixed.cols() > 0) {
    const FixedEffectSummary fx = fixed_effect_summary(fit, a.level, derived);
    auto out = open_out(dir / "fixed_effects.csv");
    out << "name,mean,sd,lower,upper\n";
    for (std::size_t i = 0; i < fx.names.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      out << fx.names[i] << ',' << format_double(fx.mean(r)) << ',' << format_double(fx.sd(r)) << ','
          << format_double(fx.lower(r)) << ',' << format_double(fx.upper(r)) << '\n';
    }
    outputs.push_back("fixed_effects.csv");
  }

  nlohmann::ordered_json m;
  m["command"] = "fit";
  m["version"] = OSPLINE_VERSION;
  m["data"] = a.data;
  m["family"] = family_name(family);
  m["order"] = a.order;
  m["knots"] = a.knots;
  m["region"] = {lo, hi};
  m["n"] = xs.size();
  m["seed"] = a.seed;
  m["num_quad"] = a.quad;
  m["samples"] = a.samples;
  m["sigma_prior_rate"] = opts.sigma_prior.rate;
  m["theta_names"] = fit.theta_names;
  m["theta_mode"] = std::vector<double>(fit.theta_mode.data(), fit.theta_mode.data() + fit.theta_mode.size());
  m["log_evidence"] = fit.log_evidence;
  m["max_condition_number"] = max_condition_number(fit);
  m["outputs"] = outputs;
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
  log << "wrote " << outputs.size() + 1 << " files to " << a.out << '\n';
}

void run_cov_compare(const CovCompareArgs& a, std::ostream& log) {
  const std::vector<int> ks = parse_ints("--knots-list", a.knots_list);
  const auto [ra, rb] = parse_region(a.region);
  for (int k : ks) {
    if (k < 1) throw InvalidArgument("--knots-list entries must be positive");
  }
  const IWPKernel kernel(a.order, 1.0);
  if (a.q1 < 0 || a.q2 < 0 || a.q1 >= a.order || a.q2 >= a.order) {
    throw InvalidArgument("--q1/--q2 must lie in 0..order-1");
  }
  const int kmax = *std::max_element(ks.begin(), ks.end());
  const int grid = a.grid > 0 ? a.grid : std::max(400, 10 * kmax);
  if (grid < 10 * kmax) throw InvalidArgument("--grid must be at least 10 times the largest knot count");
  const std::vector<double> pts = regular_grid(ra, rb, grid);
  const CovGrid exact = exact_cov_grid(kernel, pts, pts, a.q1, a.q2, ra);

  std::vector<double> errors;
  for (int k : ks) {
    const OSplineBasis basis(a.order, KnotSet::equally_spaced(ra, rb, static_cast<std::size_t>(k)));
    const CovGrid approx = ospline_cov_grid(basis, 1.0, pts, pts, a.q1, a.q2);
    const std::string path = a.out + "_k" + std::to_string(k) + ".csv";
    auto out = open_out(path);
    write_cov_compare_csv(out, exact, approx);
    const double err = (exact.values - approx.values).cwiseAbs().maxCoeff();
    errors.push_back(err);
    const double bound = 2.0 / k;
    log << "k=" << k << " sup_error=" << format_double(err) << " bound_2_over_k=" << format_double(bound)
        << " within_bound=" << (err <= bound + 1e-9 ? "yes" : "no") << " file=" << path << '\n';
  }
  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    log << "rate k=" << ks[i] << "->" << ks[i + 1] << " error_ratio=" << format_double(errors[i] / errors[i + 1])
        << " knot_ratio=" << format_double(static_cast<double>(ks[i + 1]) / ks[i]) << '\n';
  }
}

void run_psd(const PsdArgs& a, std::ostream& log) {
  if (a.sigma.has_value() == a.psd.has_value()) throw InvalidArgument("give exactly one of --sigma or --psd");
  if (a.u.has_value() != a.alpha.has_value()) throw InvalidArgument("--u and --alpha must be given together");
  const PSDSpec spec(a.h, a.order);
  if (a.sigma) {
    log << "sigma = " << format_double(*a.sigma) << '\n';
    log << "psd = " << format_double(sigma_to_psd(spec, *a.sigma)) << '\n';
  } else {
    log << "psd = " << format_double(*a.psd) << '\n';
    log << "sigma = " << format_double(psd_to_sigma(spec, *a.psd)) << '\n';
  }
  if (a.u) {
    const ExponentialPrior prior = prior_from_psd(spec, *a.u, *a.alpha);
    log << "rate_psd = " << format_double(ExponentialPrior::from_tail(*a.u, *a.alpha).rate) << '\n';
    log << "rate_sigma = " << format_double(prior.rate) << '\n';
  }
}

void run_experiment_command(const ExperimentArgs& a, std::ostream& log) {
  ExperimentConfig config = default_config(a.experiment, a.profile);
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw DataError("cannot read config file '" + a.config + "'");
    apply_config(config, read_key_values(in, a.config));
  }
  if (a.seed) config.seed = *a.seed;
  if (a.threads) config.threads = *a.threads;
  const std::string out = a.out.empty() ? "results/" + a.experiment : a.out;
  log << "running experiment " << config.experiment << " (profile " << config.profile << ", seed " << config.seed
      << ")\n";
  const auto files = run_experiment(config, out);
  for (const auto& f : files) log << "wrote " << (fs::path(out) / f).string() << '\n';
}

}  // namespace ospline::cli
