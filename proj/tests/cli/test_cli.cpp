#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ospline/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ospline_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run cli(const std::string& args, const fs::path& dir) {
  const std::string out = (dir / "stdout.txt").string();
  const std::string err = (dir / "stderr.txt").string();
  const std::string cmd = std::string("\"") + OSPLINE_CLI_PATH + "\" " + args + " >\"" + out + "\" 2>\"" + err + "\"";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// y = sqrt(3) sin(x / 2) + N(0, 1) at n equally spaced points on [0, 20].
fs::path write_sine_csv(const fs::path& dir, int n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  const fs::path path = dir / "sine.csv";
  std::ofstream out(path);
  out << "x,y\n";
  for (int i = 0; i < n; ++i) {
    const double x = 20.0 * i / (n - 1);
    out << ospline::format_double(x) << ',' << ospline::format_double(std::sqrt(3.0) * std::sin(x / 2.0) + noise(rng))
        << '\n';
  }
  return path;
}

// Daily counts with a weekday effect and a smooth log-rate.
fs::path write_count_csv(const fs::path& dir, int n) {
  static const char* days[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  std::mt19937_64 rng(11);
  const fs::path path = dir / "counts.csv";
  std::ofstream out(path);
  out << "day,cases,weekday\n";
  for (int i = 0; i < n; ++i) {
    const double rate = std::exp(2.0 + 1.5 * std::sin(i / 25.0) + (i % 7 == 5 ? -0.4 : 0.0));
    std::poisson_distribution<int> draw(rate);
    out << i << ',' << draw(rng) << ',' << days[i % 7] << '\n';
  }
  return path;
}

ospline::DataTable read_table(const fs::path& p) { return ospline::DataTable::read_file(p.string()); }

}  // namespace

TEST_CASE("help and version") {
  const fs::path dir = scratch("help");
  const Run help = cli("--help", dir);
  CHECK(help.status == 0);
  CHECK(help.out.find("fit") != std::string::npos);
  CHECK(help.out.find("experiment") != std::string::npos);
  CHECK(cli("--version", dir).status == 0);
  CHECK(cli("", dir).status == 2);
  CHECK(cli("frobnicate", dir).status == 2);
}

TEST_CASE("gaussian fit writes curves, hyperparameters and a manifest") {
  const fs::path dir = scratch("fit_gaussian");
  const fs::path data = write_sine_csv(dir, 100);
  const fs::path out = dir / "out";
  const std::string args = "fit --data \"" + data.string() + "\" --family gaussian --order 3 --knots 30 --psd-h 5 "
                           "--psd-u 3 --psd-alpha 0.01 --noise-sd 1 --deriv 0,1,2 --samples 500 --seed 4 --out \"" +
                           out.string() + "\"";
  const Run r = cli(args, dir);
  REQUIRE_MESSAGE(r.status == 0, r.err);
  for (const char* f : {"curve_q0.csv", "curve_q1.csv", "curve_q2.csv", "hyper.csv", "manifest.json"}) {
    CHECK(fs::exists(out / f));
  }
  const auto curve = read_table(out / "curve_q0.csv");
  CHECK(curve.columns() == std::vector<std::string>{"x", "q", "mean", "sd", "lower", "upper"});
  const std::vector<double> xs = curve.numeric("x");
  const std::vector<double> mean = curve.numeric("mean");
  const std::vector<double> lower = curve.numeric("lower");
  const std::vector<double> upper = curve.numeric("upper");
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(lower[i] <= mean[i]);
    CHECK(mean[i] <= upper[i]);
    sse += std::pow(mean[i] - std::sqrt(3.0) * std::sin(xs[i] / 2.0), 2);
  }
  CHECK(std::sqrt(sse / xs.size()) < 0.5);

  const auto hyper = read_table(out / "hyper.csv");
  double total = 0.0;
  for (double w : hyper.numeric("weight")) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["order"] == 3);
  CHECK(manifest["outputs"].size() == 4);

  // Same seed, same bytes; a different seed changes the sampled intervals.
  const fs::path again = dir / "again";
  std::string rerun = args;
  rerun.replace(rerun.find(out.string()), out.string().size(), again.string());
  REQUIRE(cli(rerun, dir).status == 0);
  for (const char* f : {"curve_q0.csv", "curve_q2.csv", "hyper.csv"}) CHECK(slurp(out / f) == slurp(again / f));
}

TEST_CASE("output CSVs round-trip through the parser") {
  const fs::path dir = scratch("roundtrip");
  const fs::path data = write_sine_csv(dir, 40);
  const fs::path out = dir / "out";
  REQUIRE(cli("fit --data \"" + data.string() + "\" --order 2 --knots 10 --psd-median 1 --noise-sd 1 --samples 50 "
              "--out \"" + out.string() + "\"",
              dir)
              .status == 0);
  const auto t = read_table(out / "curve_q0.csv");
  std::ostringstream again;
  again << "x,mean\n";
  const auto xs = t.numeric("x");
  const auto mean = t.numeric("mean");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    again << ospline::format_double(xs[i]) << ',' << ospline::format_double(mean[i]) << '\n';
  }
  std::istringstream in(again.str());
  const auto back = ospline::DataTable::parse(in);
  CHECK(back.numeric("x") == xs);
  CHECK(back.numeric("mean") == mean);
}

TEST_CASE("overdispersed Poisson fit with a weekday effect") {
  const fs::path dir = scratch("fit_poisson");
  const fs::path data = write_count_csv(dir, 140);
  const fs::path out = dir / "out";
  const Run r = cli("fit --data \"" + data.string() + "\" --x day --y cases --family poisson-od --order 3 --knots 30 "
                    "--psd-h 7 --psd-median 0.6931 --fixed weekday --exp-transform --deriv 0,1 --samples 400 "
                    "--quad 4 --out \"" + out.string() + "\"",
                    dir);
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(fs::exists(out / "curve_exp_q0.csv"));
  CHECK(fs::exists(out / "curve_exp_q1.csv"));
  const auto fx = read_table(out / "fixed_effects.csv");
  const auto names = fx.text("name");
  CHECK(names.size() == 7);
  double sum = 0.0;
  for (double m : fx.numeric("mean")) sum += m;
  CHECK(std::abs(sum) < 1e-9);
  const auto rate = read_table(out / "curve_exp_q0.csv");
  for (double v : rate.numeric("lower")) CHECK(v > 0.0);
  const auto hyper = read_table(out / "hyper.csv");
  CHECK(hyper.rows() == 16);
}

TEST_CASE("fit errors map to exit codes") {
  const fs::path dir = scratch("fit_errors");
  const fs::path data = write_sine_csv(dir, 30);
  const std::string base = "fit --data \"" + data.string() + "\" --psd-median 1 --noise-sd 1 --samples 10 --out \"" +
                           (dir / "out").string() + "\"";

  const Run missing = cli(base + " --y response", dir);
  CHECK(missing.status == 3);
  CHECK(missing.err.find("'response'") != std::string::npos);

  const Run deriv = cli(base + " --order 2 --deriv 0,2", dir);
  CHECK(deriv.status == 2);
  CHECK(deriv.err.find("--deriv 2") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  CHECK(cli(base + " --family binomial", dir).status == 2);
  CHECK(cli("fit --data \"" + (dir / "nope.csv").string() + "\" --psd-median 1", dir).status == 3);

  {
    std::ofstream bad(dir / "bad.csv");
    bad << "x,y\n1,2\n2,oops\n";
  }
  const Run cell = cli("fit --data \"" + (dir / "bad.csv").string() + "\" --psd-median 1 --out \"" +
                           (dir / "out").string() + "\"",
                       dir);
  CHECK(cell.status == 3);
  CHECK(cell.err.find("row 2") != std::string::npos);

  {
    std::ofstream huge(dir / "huge.csv");
    huge << "x,y\n0,1\n1,1e308\n2,3\n";
  }
  const Run numeric = cli("fit --data \"" + (dir / "huge.csv").string() + "\" --family poisson --psd-median 1 "
                          "--samples 10 --out \"" + (dir / "out").string() + "\"",
                          dir);
  CHECK(numeric.status == 4);
}

TEST_CASE("cov-compare reports the bound and the rate") {
  const fs::path dir = scratch("cov");
  const std::string prefix = (dir / "cmp").string();
  const Run r = cli("cov-compare --order 2 --knots-list 10,20 --region 0,1 --q1 0 --q2 0 --out \"" + prefix + "\"", dir);
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(r.out.find("k=10 sup_error=") != std::string::npos);
  CHECK(r.out.find("within_bound=yes") != std::string::npos);
  CHECK(r.out.find("within_bound=no") == std::string::npos);
  CHECK(r.out.find("rate k=10->20 error_ratio=") != std::string::npos);
  const auto t = read_table(prefix + "_k10.csv");
  CHECK(t.columns() == std::vector<std::string>{"s", "t", "q1", "q2", "exact", "approx", "abs_err"});
  const auto s = t.numeric("s");
  const auto err = t.numeric("abs_err");
  CHECK(*std::max_element(err.begin(), err.end()) <= 0.2 + 1e-9);
  CHECK(s.size() == 401 * 401);
  CHECK(cli("cov-compare --order 2 --q1 2", dir).status == 2);
  CHECK(cli("cov-compare --order 2 --knots-list 50 --grid 100", dir).status == 2);
}

TEST_CASE("psd conversions") {
  const fs::path dir = scratch("psd");
  const Run a = cli("psd --order 3 --h 1 --sigma 1", dir);
  CHECK(a.status == 0);
  CHECK(a.out.find("psd = 0.2236067977499") != std::string::npos);
  const Run b = cli("psd --order 1 --h 1 --psd 2 --u 1 --alpha 0.5", dir);
  CHECK(b.status == 0);
  CHECK(b.out.find("sigma = 2") != std::string::npos);
  CHECK(b.out.find("rate_sigma = 0.6931471805599") != std::string::npos);
  CHECK(cli("psd --order 2 --h 1 --sigma 1 --psd 1", dir).status == 2);
  CHECK(cli("psd --order 2 --h 1", dir).status == 2);
  CHECK(cli("psd --order 2 --h 1 --sigma 1 --u 1", dir).status == 2);
}

TEST_CASE("experiments run from the bundled configs") {
  const fs::path dir = scratch("experiments");
  const std::string configs = std::string(OSPLINE_SOURCE_DIR) + "/configs/";

  const Run corr = cli("experiment --experiment corr --config \"" + configs + "corr.cfg\" --out \"" +
                           (dir / "corr").string() + "\"",
                       dir);
  REQUIRE_MESSAGE(corr.status == 0, corr.err);
  CHECK(fs::exists(dir / "corr" / "corr.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "corr" / "manifest.json"));
  CHECK(manifest["experiment"] == "corr");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);

  {
    std::ofstream small(dir / "gmm_small.cfg");
    small << slurp(configs + "gmm.cfg") << "replications = 3\n";
  }
  const Run gmm = cli("experiment --experiment gmm --config \"" + (dir / "gmm_small.cfg").string() + "\" --out \"" +
                          (dir / "gmm").string() + "\"",
                      dir);
  REQUIRE_MESSAGE(gmm.status == 0, gmm.err);
  CHECK(read_table(dir / "gmm" / "gmm_rmse.csv").rows() == 6);

  {
    std::ofstream small(dir / "bench_small.cfg");
    small << slurp(configs + "bench.cfg") << "sizes = 50,100\nreplications = 2\nknots = 10,30\nsamples = 100\n";
  }
  const Run bench = cli("experiment --experiment bench --config \"" + (dir / "bench_small.cfg").string() +
                            "\" --out \"" + (dir / "bench").string() + "\"",
                        dir);
  REQUIRE_MESSAGE(bench.status == 0, bench.err);
  const auto cond = read_table(dir / "bench" / "bench_conditioning.csv");
  CHECK(cond.rows() == 6);
  CHECK(fs::exists(dir / "bench" / "bench_timing.csv"));

  // Same seed, byte-identical outputs.
  REQUIRE(cli("experiment --experiment gmm --config \"" + (dir / "gmm_small.cfg").string() + "\" --threads 3 --out \"" +
                  (dir / "gmm2").string() + "\"",
              dir)
              .status == 0);
  CHECK(slurp(dir / "gmm" / "gmm_rmse.csv") == slurp(dir / "gmm2" / "gmm_rmse.csv"));
  CHECK(slurp(dir / "gmm" / "gmm_curves.csv") == slurp(dir / "gmm2" / "gmm_curves.csv"));
}

TEST_CASE("experiment errors") {
  const fs::path dir = scratch("experiment_errors");
  CHECK(cli("experiment --experiment nope --out \"" + (dir / "x").string() + "\"", dir).status == 2);
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "knots = 5\nwibble = 3\n";
  }
  const Run r = cli("experiment --experiment corr --config \"" + (dir / "bad.cfg").string() + "\" --out \"" +
                        (dir / "x").string() + "\"",
                    dir);
  CHECK(r.status == 3);
  CHECK(r.err.find("wibble") != std::string::npos);
  CHECK(cli("experiment --experiment corr --profile huge", dir).status == 2);
}
