#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ospline/aghq.hpp"
#include "ospline/basis.hpp"
#include "ospline/error.hpp"
#include "ospline/iwp.hpp"
#include "ospline/knots.hpp"
#include "ospline/model.hpp"
#include "ospline/posterior.hpp"
#include "ospline/prior.hpp"

namespace py = pybind11;
using namespace ospline;

namespace {

OSplineBasis equal_basis(int order, std::size_t k, double a, double b) {
  return OSplineBasis(order, build_equal_knots(a, b, k));
}

Transform parse_transform(const std::string& name) {
  if (name == "none") return Transform::none;
  if (name == "exp") return Transform::exp;
  throw InvalidArgument("transform must be 'none' or 'exp'");
}

struct FitResult {
  PosteriorFit fit;
};

FitResult fit_curve(const std::vector<double>& x, const std::vector<double>& y, const std::string& family,
                    int order, std::size_t knots, std::optional<std::pair<double, double>> region, double psd_h,
                    std::optional<double> psd_median, std::optional<double> psd_u, std::optional<double> psd_alpha,
                    std::optional<double> noise_sd, double noise_median, double od_median, bool exact,
                    int num_quad, int samples, std::uint64_t seed, int threads) {
  if (x.empty()) throw InvalidArgument("x is empty");
  const Family fam = parse_family(family);
  const PSDSpec spec(psd_h, order);
  ModelOptions opts;
  if (psd_median && (psd_u || psd_alpha)) throw InvalidArgument("give either psd_median or psd_u/psd_alpha");
  if (psd_median) {
    opts.sigma_prior = prior_from_psd(spec, *psd_median, 0.5);
  } else if (psd_u && psd_alpha) {
    opts.sigma_prior = prior_from_psd(spec, *psd_u, *psd_alpha);
  } else {
    throw InvalidArgument("the smoothing prior needs psd_median or both psd_u and psd_alpha");
  }
  if (fam == Family::gaussian) {
    if (noise_sd) {
      opts.noise_sd = *noise_sd;
    } else {
      opts.family_prior = ExponentialPrior::from_median(noise_median);
    }
  } else if (noise_sd) {
    throw InvalidArgument("noise_sd only applies to the gaussian family");
  }
  if (fam == Family::poisson_overdispersed) opts.family_prior = ExponentialPrior::from_median(od_median);

  double lo = x.front();
  double hi = x.front();
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (region) {
    lo = region->first;
    hi = region->second;
  }
  const LatentModel model = exact ? make_exact_model(order, lo, hi, x, y, fam, opts)
                                  : make_ospline_model(order, knots, lo, hi, x, y, fam, opts);
  AghqOptions ao;
  ao.num_quad = num_quad;
  ao.samples = samples;
  ao.seed = seed;
  ao.threads = threads;
  return FitResult{aghq_fit(model, ao)};
}

void translate(std::exception_ptr p) {
  try {
    if (p) std::rethrow_exception(p);
  } catch (const InvalidArgument& e) {
    PyErr_SetString(PyExc_ValueError, e.what());
  } catch (const DataError& e) {
    PyErr_SetString(PyExc_ValueError, e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Overlapping-spline approximations to integrated Wiener process priors";
  py::register_exception_translator(&translate);

  m.def("equal_knots", [](double a, double b, std::size_t k) {
    const KnotSet ks = build_equal_knots(a, b, k);
    return std::vector<double>(ks.knots().begin(), ks.knots().end());
  }, py::arg("region_start"), py::arg("region_end"), py::arg("k"));

  m.def("design", [](int order, std::size_t k, double a, double b, const std::vector<double>& xs, int q) {
    return equal_basis(order, k, a, b).design(xs, q).values;
  }, py::arg("order"), py::arg("k"), py::arg("region_start"), py::arg("region_end"), py::arg("xs"),
     py::arg("q") = 0, "n x k matrix of q-th basis derivatives at xs, equally spaced knots");

  m.def("weight_precision", [](int order, std::size_t k, double a, double b) {
    return equal_basis(order, k, a, b).weight_precision();
  }, py::arg("order"), py::arg("k"), py::arg("region_start"), py::arg("region_end"));

  m.def("exact_cov", [](int order, double sigma, double s, double t, int q1, int q2) {
    return exact_cov(IWPKernel(order, sigma), s, t, q1, q2);
  }, py::arg("order"), py::arg("sigma"), py::arg("s"), py::arg("t"), py::arg("q1") = 0, py::arg("q2") = 0,
     "Covariance of sigma W_p derivatives; s, t measured from the origin");

  m.def("ospline_cov", [](int order, std::size_t k, double a, double b, double sigma, double s, double t, int q1,
                          int q2) { return ospline_cov(equal_basis(order, k, a, b), sigma, s, t, q1, q2); },
        py::arg("order"), py::arg("k"), py::arg("region_start"), py::arg("region_end"), py::arg("sigma"),
        py::arg("s"), py::arg("t"), py::arg("q1") = 0, py::arg("q2") = 0);

  m.def("sup_cov_error", &sup_cov_error, py::arg("order"), py::arg("k"), py::arg("region_start"),
        py::arg("region_end"), py::arg("grid_density"), py::arg("q1") = 0, py::arg("q2") = 0);

  m.def("sigma_to_psd", [](double sigma, double h, int order) { return sigma_to_psd(PSDSpec(h, order), sigma); },
        py::arg("sigma"), py::arg("h"), py::arg("order"));
  m.def("psd_to_sigma", [](double psd, double h, int order) { return psd_to_sigma(PSDSpec(h, order), psd); },
        py::arg("psd"), py::arg("h"), py::arg("order"));
  m.def("psd_conditional_sd", [](int order, double sigma, double x, double h) {
    return psd_conditional_check(IWPKernel(order, sigma), x, h);
  }, py::arg("order"), py::arg("sigma"), py::arg("x"), py::arg("h"));

  py::class_<FitResult>(m, "Fit")
      .def_property_readonly("log_evidence", [](const FitResult& r) { return r.fit.log_evidence; })
      .def_property_readonly("theta_names", [](const FitResult& r) { return r.fit.theta_names; })
      .def_property_readonly("theta_mode", [](const FitResult& r) { return r.fit.theta_mode; })
      .def_property_readonly("weights", [](const FitResult& r) {
        std::vector<double> w;
        for (const auto& p : r.fit.points) w.push_back(p.weight);
        return w;
      })
      .def_property_readonly("sigma_mean", [](const FitResult& r) { return posterior_hyper_mean(r.fit).sigma; })
      .def_property_readonly("samples", [](const FitResult& r) { return r.fit.samples; })
      .def("moments", [](const FitResult& r, const std::vector<double>& xs, int q) {
        const PosteriorMoments pm = posterior_moments(r.fit, xs, q);
        return py::make_tuple(pm.mean, pm.sd);
      }, py::arg("xs"), py::arg("q") = 0, "Mixture mean and SD of g^(q) at xs")
      .def("curve", [](const FitResult& r, const std::vector<double>& xs, int q, const std::string& transform,
                       double level) {
        const PosteriorCurve c = posterior_function(r.fit, xs, q, parse_transform(transform), level);
        py::dict d;
        d["x"] = c.xs;
        d["mean"] = c.mean;
        d["sd"] = c.sd;
        d["lower"] = c.lower;
        d["upper"] = c.upper;
        return d;
      }, py::arg("xs"), py::arg("q") = 0, py::arg("transform") = "none", py::arg("level") = 0.95);

  m.def("fit", &fit_curve, py::arg("x"), py::arg("y"), py::arg("family") = "gaussian", py::arg("order") = 3,
        py::arg("knots") = 30, py::arg("region") = py::none(), py::arg("psd_h") = 1.0,
        py::arg("psd_median") = py::none(), py::arg("psd_u") = py::none(), py::arg("psd_alpha") = py::none(),
        py::arg("noise_sd") = py::none(), py::arg("noise_median") = 1.0, py::arg("od_median") = 0.1,
        py::arg("exact") = false, py::arg("num_quad") = 10, py::arg("samples") = 3000, py::arg("seed") = 1,
        py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
}
