#include "ospline/knots.hpp"

#include <cmath>
#include <string>

#include "ospline/error.hpp"

namespace ospline {

KnotSet::KnotSet(double region_start, double region_end, std::vector<double> knots)
    : region_start_(region_start), region_end_(region_end), knots_(std::move(knots)) {
  if (!std::isfinite(region_start_) || !std::isfinite(region_end_)) {
    throw InvalidArgument("KnotSet: region bounds must be finite");
  }
  if (!(region_end_ > region_start_)) {
    throw InvalidArgument("KnotSet: region_end must exceed region_start");
  }
  if (knots_.empty()) {
    throw InvalidArgument("KnotSet: at least one knot is required");
  }
  spacings_.resize(knots_.size());
  double prev = region_start_;
  for (std::size_t j = 0; j < knots_.size(); ++j) {
    const double s = knots_[j];
    if (!std::isfinite(s) || !(s > prev)) {
      throw InvalidArgument("KnotSet: knots must be finite and strictly increasing above region_start (knot " +
                            std::to_string(j) + ")");
    }
    spacings_[j] = s - prev;
    prev = s;
  }
  if (knots_.back() > region_end_) {
    throw InvalidArgument("KnotSet: last knot lies beyond region_end");
  }
}

KnotSet KnotSet::equally_spaced(double region_start, double region_end, std::size_t k) {
  if (!std::isfinite(region_start) || !std::isfinite(region_end)) {
    throw InvalidArgument("build_equal_knots: region bounds must be finite");
  }
  if (k == 0) {
    throw InvalidArgument("build_equal_knots: k must be positive");
  }
  if (!(region_end > region_start)) {
    throw InvalidArgument("build_equal_knots: region_end must exceed region_start");
  }
  std::vector<double> knots(k);
  const double width = region_end - region_start;
  for (std::size_t i = 1; i <= k; ++i) {
    knots[i - 1] = region_start + width * static_cast<double>(i) / static_cast<double>(k);
  }
  knots.back() = region_end;
  return KnotSet(region_start, region_end, std::move(knots));
}

KnotSet build_equal_knots(double region_start, double region_end, std::size_t k) {
  return KnotSet::equally_spaced(region_start, region_end, k);
}

double test_function_eval(const KnotSet& knots, std::size_t j, double x) {
  if (j >= knots.size()) {
    throw InvalidArgument("test_function_eval: index " + std::to_string(j) + " out of range");
  }
  return (x > knots.lower(j) && x <= knots.upper(j)) ? 1.0 : 0.0;
}

}  // namespace ospline
