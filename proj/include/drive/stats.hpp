#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace drive::stats {

/// Quantile with linear interpolation between order statistics
/// (position q * (n - 1) in the sorted sample).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

/// Box-and-whisker summary: quartiles plus the central 95 % range.
struct Distribution {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double p2_5 = 0.0;
  double p97_5 = 0.0;
};

inline Distribution summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Distribution d;
  d.count = values.size();
  d.median = quantile_sorted(values, 0.5);
  d.q1 = quantile_sorted(values, 0.25);
  d.q3 = quantile_sorted(values, 0.75);
  d.p2_5 = quantile_sorted(values, 0.025);
  d.p97_5 = quantile_sorted(values, 0.975);
  return d;
}

}  // namespace drive::stats
