#include "purrfect/stats/filters.hpp"

#include <vector>

#include "purrfect/stats/descriptive.hpp"

namespace purrfect::stats {

void to_json(nlohmann::json& j, const FilterReport& r) {
  j = {{"n_input", r.n_input},
       {"n_below_floor", r.n_below_floor},
       {"n_above_threshold", r.n_above_threshold},
       {"n_output", r.n_output},
       {"floor_s", r.floor_s},
       {"sd_multiplier", r.sd_multiplier},
       {"mean_after_floor_s", r.mean_after_floor_s},
       {"sd_after_floor_s", r.sd_after_floor_s},
       {"upper_threshold_s", r.upper_threshold_s}};
}

FilterResult filter_response_times(const ObservationTable& table, double floor_s,
                                   double sd_multiplier) {
  FilterResult result;
  FilterReport& report = result.report;
  report.n_input = table.size();
  report.floor_s = floor_s;
  report.sd_multiplier = sd_multiplier;

  ObservationTable floored;
  std::vector<double> times;
  for (const auto& row : table.rows) {
    if (row.response_time_s < floor_s) {
      ++report.n_below_floor;
    } else {
      floored.rows.push_back(row);
      times.push_back(row.response_time_s);
    }
  }
  report.mean_after_floor_s = mean(times);
  report.sd_after_floor_s = sample_sd(times);
  report.upper_threshold_s = report.mean_after_floor_s + sd_multiplier * report.sd_after_floor_s;

  for (auto& row : floored.rows) {
    if (row.response_time_s > report.upper_threshold_s) {
      ++report.n_above_threshold;
    } else {
      result.table.rows.push_back(std::move(row));
    }
  }
  report.n_output = result.table.size();
  return result;
}

}  // namespace purrfect::stats
