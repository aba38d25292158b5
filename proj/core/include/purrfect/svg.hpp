#pragma once

#include <optional>
#include <string>
#include <vector>

#include "purrfect/stats/descriptive.hpp"

namespace purrfect::svg {

struct BoxSeries {
  std::string name;
  std::vector<std::string> categories;
  std::vector<stats::BoxStats> boxes;
};

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional pointwise band, same length as y.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

/// Side-by-side box plots, one group of boxes per category. `reference`
/// (one value per category) is drawn as a dashed line.
std::string box_plot(const Axes& axes, const std::vector<BoxSeries>& series,
                     const std::vector<double>& reference = {});

std::string line_plot(const Axes& axes, const std::vector<LineSeries>& series);

}  // namespace purrfect::svg
