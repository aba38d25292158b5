#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "purrfect/datastore.hpp"

namespace purrfect::stats {

inline constexpr double kResponseFloorS = 1.2;
inline constexpr double kOutlierSdMultiplier = 2.0;

struct FilterReport {
  std::size_t n_input = 0;
  std::size_t n_below_floor = 0;
  std::size_t n_above_threshold = 0;
  std::size_t n_output = 0;
  double floor_s = kResponseFloorS;
  double sd_multiplier = kOutlierSdMultiplier;
  /// Mean and sample SD of the rows that survived the floor.
  double mean_after_floor_s = 0.0;
  double sd_after_floor_s = 0.0;
  /// mean_after_floor_s + sd_multiplier * sd_after_floor_s.
  double upper_threshold_s = 0.0;
};

void to_json(nlohmann::json& j, const FilterReport& r);

struct FilterResult {
  ObservationTable table;
  FilterReport report;
};

/// Drops rows with response_time_s < floor_s, then rows above
/// mean + sd_multiplier * sd of what remains. Row order is preserved.
FilterResult filter_response_times(const ObservationTable& table,
                                   double floor_s = kResponseFloorS,
                                   double sd_multiplier = kOutlierSdMultiplier);

}  // namespace purrfect::stats
