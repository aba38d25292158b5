#include "purrfect/stats/descriptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "purrfect/error.hpp"

namespace purrfect::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw Error(Errc::InsufficientData, "quantile of an empty sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> x) {
  if (x.empty()) throw Error(Errc::InsufficientData, "box statistics of an empty sample");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return BoxStats{x.size(),          *lo,     quantile(x, 0.25), quantile(x, 0.5),
                  quantile(x, 0.75), *hi,     mean(x),           sample_sd(x)};
}

void to_json(nlohmann::json& j, const BoxStats& b) {
  j = {{"n", b.n},           {"min", b.min},   {"q1", b.q1},     {"median", b.median},
       {"q3", b.q3},         {"max", b.max},   {"mean", b.mean}, {"sd", b.sd}};
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

Estimate wald(double estimate, double std_error) {
  Estimate e;
  e.estimate = estimate;
  e.std_error = std_error;
  e.ci_lower = estimate - kZ975 * std_error;
  e.ci_upper = estimate + kZ975 * std_error;
  if (std_error > 0.0) {
    e.z = estimate / std_error;
    e.p_value = normal_two_sided_p(e.z);
  } else {
    e.z = estimate == 0.0 ? 0.0 : std::copysign(INFINITY, estimate);
    e.p_value = estimate == 0.0 ? 1.0 : 0.0;
  }
  return e;
}

void to_json(nlohmann::json& j, const Estimate& e) {
  j = {{"estimate", e.estimate}, {"std_error", e.std_error}, {"ci_lower", e.ci_lower},
       {"ci_upper", e.ci_upper}, {"z", e.z},                 {"p_value", e.p_value}};
}

}  // namespace purrfect::stats
