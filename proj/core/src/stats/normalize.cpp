#include "purrfect/stats/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "purrfect/error.hpp"

namespace purrfect::stats {

std::vector<double> normalize_magnitudes(std::span<const double> raw) {
  if (std::any_of(raw.begin(), raw.end(), [](double v) { return !std::isfinite(v); })) {
    throw Error(Errc::ValidationError, "ratings must be finite");
  }
  if (raw.size() < 2) throw Error(Errc::DegenerateRatings, "need at least two ratings");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw Error(Errc::DegenerateRatings, "all ratings are equal");
  std::vector<double> out;
  out.reserve(raw.size());
  for (double v : raw) out.push_back((v - *lo) / range);
  return out;
}

}  // namespace purrfect::stats
