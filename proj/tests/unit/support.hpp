#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Small seeded generator for property tests. splitmix64 keeps the streams
// independent of the standard library's distribution implementations.
struct Gen {
  std::uint64_t state;

  explicit Gen(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

  double normal() {
    const double u1 = uniform(1e-300, 1.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Sorted distinct knots in (a, b] ending at b.
  std::vector<double> knots(double a, double b, int k) {
    std::vector<double> cuts;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      cuts.push_back(uniform(0.2, 1.0));
      total += cuts.back();
    }
    std::vector<double> out;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += cuts[static_cast<std::size_t>(i)];
      out.push_back(i + 1 == k ? b : a + (b - a) * acc / total);
    }
    return out;
  }
};

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }
