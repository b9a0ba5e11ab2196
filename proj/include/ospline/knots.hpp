#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ospline {

/// Ordered knot locations s_1 < ... < s_k over [region_start, region_end].
///
/// region_start plays the role of s_0 and is the origin of the integrated
/// process; it is not stored as a knot. Knot j (0-based) owns the cell
/// (s_{j-1}, s_j] of width spacing(j).
class KnotSet {
 public:
  KnotSet(double region_start, double region_end, std::vector<double> knots);

  static KnotSet equally_spaced(double region_start, double region_end, std::size_t k);

  double region_start() const { return region_start_; }
  double region_end() const { return region_end_; }
  std::size_t size() const { return knots_.size(); }

  std::span<const double> knots() const { return knots_; }
  std::span<const double> spacings() const { return spacings_; }

  /// Right end s_j of cell j.
  double upper(std::size_t j) const { return knots_[j]; }
  /// Left end s_{j-1} of cell j (region_start for j = 0).
  double lower(std::size_t j) const { return j == 0 ? region_start_ : knots_[j - 1]; }
  double spacing(std::size_t j) const { return spacings_[j]; }

  bool contains(double x) const { return x >= region_start_ && x <= region_end_; }

 private:
  double region_start_;
  double region_end_;
  std::vector<double> knots_;
  std::vector<double> spacings_;
};

/// Equally spaced knots s_i = a + i (b - a) / k, i = 1..k.
KnotSet build_equal_knots(double region_start, double region_end, std::size_t k);

/// Piecewise-constant test function of cell j: 1 on (s_{j-1}, s_j], else 0.
double test_function_eval(const KnotSet& knots, std::size_t j, double x);

}  // namespace ospline
