#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ospline::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct FitArgs {
  std::string data;
  std::string x_column = "x";
  std::string y_column = "y";
  std::string family = "gaussian";
  int order = 3;
  int knots = 30;
  std::string region;
  double psd_h = 1.0;
  std::optional<double> psd_u;
  std::optional<double> psd_alpha;
  std::optional<double> psd_median;
  std::vector<std::string> fixed;
  double fixed_sd = 10.0;
  std::optional<double> poly_sd;
  std::optional<double> noise_sd;
  double noise_median = 1.0;
  double od_median = 0.1;
  int quad = 10;
  int samples = 3000;
  std::string deriv = "0";
  std::uint64_t seed = 1;
  std::string out = "fit_out";
  bool exp_transform = false;
  int grid_points = 200;
  double level = 0.95;
  int threads = 1;
};

struct CovCompareArgs {
  int order = 2;
  std::string knots_list = "5,10,20,40";
  std::string region = "0,1";
  int q1 = 0;
  int q2 = 0;
  int grid = 0;
  std::string out = "cov_compare";
};

struct PsdArgs {
  int order = 1;
  double h = 1.0;
  std::optional<double> sigma;
  std::optional<double> psd;
  std::optional<double> u;
  std::optional<double> alpha;
};

struct ExperimentArgs {
  std::string experiment;
  std::string config;
  std::string profile = "ci";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void run_fit(const FitArgs& args, std::ostream& log);
void run_cov_compare(const CovCompareArgs& args, std::ostream& log);
void run_psd(const PsdArgs& args, std::ostream& log);
void run_experiment_command(const ExperimentArgs& args, std::ostream& log);

}  // namespace ospline::cli
