#pragma once

#include <cstddef>
#include <span>

#include <nlohmann/json.hpp>

namespace purrfect::stats {

inline constexpr double kZ975 = 1.959963984540054;

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> x);
/// Linear-interpolation quantile (Hyndman-Fan type 7, R's default).
double quantile(std::span<const double> x, double p);

struct BoxStats {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0, sd = 0;
};

/// Errc::InsufficientData for an empty sample.
BoxStats box_stats(std::span<const double> x);

void to_json(nlohmann::json& j, const BoxStats& b);

/// Point estimate with a normal-approximation (Wald) interval and two-sided
/// p-value for the null of zero.
struct Estimate {
  double estimate = 0, std_error = 0, ci_lower = 0, ci_upper = 0, z = 0, p_value = 1;
};

Estimate wald(double estimate, double std_error);

/// Two-sided normal p-value, 2 * (1 - Phi(|z|)).
double normal_two_sided_p(double z);

void to_json(nlohmann::json& j, const Estimate& e);

}  // namespace purrfect::stats
