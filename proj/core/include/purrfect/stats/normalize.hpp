#pragma once

#include <span>
#include <vector>

namespace purrfect::stats {

/// Per-participant min-max scaling of free magnitude estimates onto [0, 1]:
/// x -> (x - min) / (max - min).
///
/// Throws Errc::DegenerateRatings when every value is equal (or fewer than
/// two values are given) and Errc::ValidationError for non-finite input.
std::vector<double> normalize_magnitudes(std::span<const double> raw);

}  // namespace purrfect::stats
