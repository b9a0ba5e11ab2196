#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ospline/error.hpp"

using namespace ospline::cli;

int main(int argc, char** argv) {
  CLI::App app{"O-spline smoothing with integrated Wiener process priors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", OSPLINE_VERSION);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to CSV data and write posterior summaries");
  fit_cmd->add_option("--data", fit.data, "Input CSV with a header row")->required();
  fit_cmd->add_option("--x", fit.x_column, "Covariate column")->capture_default_str();
  fit_cmd->add_option("--y", fit.y_column, "Response column")->capture_default_str();
  fit_cmd->add_option("--family", fit.family, "gaussian | poisson | poisson-od")->capture_default_str();
  fit_cmd->add_option("--order", fit.order, "Order p of the integrated Wiener process")->capture_default_str();
  fit_cmd->add_option("--knots", fit.knots, "Number of equally spaced knots")->capture_default_str();
  fit_cmd->add_option("--region", fit.region, "start,end (defaults to the range of x)");
  fit_cmd->add_option("--psd-h", fit.psd_h, "Step h of the predictive SD sigma(h)")->capture_default_str();
  fit_cmd->add_option("--psd-u", fit.psd_u, "Prior tail point: P(sigma(h) > u) = alpha");
  fit_cmd->add_option("--psd-alpha", fit.psd_alpha, "Prior tail probability");
  fit_cmd->add_option("--psd-median", fit.psd_median, "Prior median of sigma(h)");
  fit_cmd->add_option("--fixed", fit.fixed, "Categorical columns, sum-to-zero coded")->delimiter(',');
  fit_cmd->add_option("--fixed-sd", fit.fixed_sd, "Prior SD of fixed effects")->capture_default_str();
  fit_cmd->add_option("--poly-sd", fit.poly_sd, "Prior SD of polynomial coefficients (default sqrt(1000))");
  fit_cmd->add_option("--noise-sd", fit.noise_sd, "Fixed Gaussian noise SD");
  fit_cmd->add_option("--noise-median", fit.noise_median, "Prior median of the noise SD when it is not fixed")
      ->capture_default_str();
  fit_cmd->add_option("--od-median", fit.od_median, "Prior median of the overdispersion SD")->capture_default_str();
  fit_cmd->add_option("--quad", fit.quad, "Quadrature points per hyperparameter")->capture_default_str();
  fit_cmd->add_option("--samples", fit.samples, "Posterior samples")->capture_default_str();
  fit_cmd->add_option("--deriv", fit.deriv, "Derivative orders to report, e.g. 0,1,2")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Output directory")->capture_default_str();
  fit_cmd->add_flag("--exp-transform", fit.exp_transform, "Also report exp(g) and g' exp(g)");
  fit_cmd->add_option("--grid-points", fit.grid_points, "Evaluation points over the region")->capture_default_str();
  fit_cmd->add_option("--level", fit.level, "Credible level")->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads")->capture_default_str();

  CovCompareArgs cov;
  auto* cov_cmd = app.add_subcommand("cov-compare", "Compare exact and O-spline covariances on a grid");
  cov_cmd->add_option("--order", cov.order)->capture_default_str();
  cov_cmd->add_option("--knots-list", cov.knots_list)->capture_default_str();
  cov_cmd->add_option("--region", cov.region)->capture_default_str();
  cov_cmd->add_option("--q1", cov.q1)->capture_default_str();
  cov_cmd->add_option("--q2", cov.q2)->capture_default_str();
  cov_cmd->add_option("--grid", cov.grid, "Grid density (default max(400, 10 k_max))");
  cov_cmd->add_option("--out", cov.out, "Output prefix; writes <prefix>_k<k>.csv")->capture_default_str();

  PsdArgs psd;
  auto* psd_cmd = app.add_subcommand("psd", "Convert between sigma and the predictive SD sigma(h)");
  // --h is the PSD step, so help is --help only here.
  psd_cmd->set_help_flag("--help", "Print this help message and exit");
  psd_cmd->add_option("--order", psd.order)->required();
  psd_cmd->add_option("--h", psd.h)->required();
  psd_cmd->add_option("--sigma", psd.sigma);
  psd_cmd->add_option("--psd", psd.psd);
  psd_cmd->add_option("--u", psd.u);
  psd_cmd->add_option("--alpha", psd.alpha);

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a scripted experiment");
  exp_cmd->add_option("--experiment", exp.experiment, "corr | bench | gmm")->required();
  exp_cmd->add_option("--config", exp.config, "key = value overrides");
  exp_cmd->add_option("--profile", exp.profile, "ci | full")->capture_default_str();
  exp_cmd->add_option("--out", exp.out, "Output directory (default results/<experiment>)");
  exp_cmd->add_option("--seed", exp.seed);
  exp_cmd->add_option("--threads", exp.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit_cmd) run_fit(fit, std::cout);
    if (*cov_cmd) run_cov_compare(cov, std::cout);
    if (*psd_cmd) run_psd(psd, std::cout);
    if (*exp_cmd) run_experiment_command(exp, std::cout);
  } catch (const ospline::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ospline::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ospline::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
