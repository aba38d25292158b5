#include "purrfect/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace purrfect::svg {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (px_lo + px_hi);
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

std::string header(const Axes& axes) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n"
      "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n"
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(axes.title), (kLeft + kWidth - kRight) / 2, kHeight - 10,
      escape(axes.x_label), (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2,
      escape(axes.y_label));
}

std::string y_axis(const Scale& y) {
  std::string out = fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n",
      kLeft, kTop, kHeight - kBottom, kWidth - kRight);
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6,
                       y(v) + 4, v);
  }
  return out;
}

Scale y_scale(const Axes& axes, double lo, double hi) {
  lo = axes.y_min.value_or(lo);
  hi = axes.y_max.value_or(hi);
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi, kHeight - kBottom, kTop};
}

}  // namespace

std::string box_plot(const Axes& axes, const std::vector<BoxSeries>& series,
                     const std::vector<double>& reference) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t categories = 0;
  for (const auto& s : series) {
    categories = std::max(categories, s.boxes.size());
    for (const auto& b : s.boxes) {
      lo = std::min(lo, b.min);
      hi = std::max(hi, b.max);
    }
  }
  for (double r : reference) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  const Scale y = y_scale(axes, lo, hi);
  std::string out = header(axes) + y_axis(y);
  if (categories == 0) return out + "</svg>\n";

  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(categories);
  const double box_w = slot * 0.7 / static_cast<double>(std::max<std::size_t>(1, series.size()));
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 4];
    for (std::size_t c = 0; c < series[s].boxes.size(); ++c) {
      const auto& b = series[s].boxes[c];
      const double x0 = kLeft + slot * c + slot * 0.15 + box_w * s;
      const double xm = x0 + box_w / 2;
      out += fmt::format(
          "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\"/>\n"
          "<rect x=\"{4:.1f}\" y=\"{5:.1f}\" width=\"{6:.1f}\" height=\"{7:.1f}\" fill=\"{3}\" "
          "fill-opacity=\"0.4\" stroke=\"{3}\"/>\n"
          "<line x1=\"{4:.1f}\" y1=\"{8:.1f}\" x2=\"{9:.1f}\" y2=\"{8:.1f}\" stroke=\"black\"/>\n",
          xm, y(b.min), y(b.max), color, x0, y(b.q3), box_w, std::max(0.5, y(b.q1) - y(b.q3)),
          y(b.median), x0 + box_w);
    }
  }
  for (std::size_t c = 0; c < categories; ++c) {
    const double xm = kLeft + slot * (c + 0.5);
    std::string label;
    for (const auto& s : series) {
      if (c < s.categories.size()) label = s.categories[c];
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", xm,
                       kHeight - kBottom + 16, escape(label));
  }
  if (!reference.empty()) {
    std::string points;
    for (std::size_t c = 0; c < reference.size(); ++c) {
      points += fmt::format("{:.1f},{:.1f} ", kLeft + slot * (c + 0.5), y(reference[c]));
    }
    out += fmt::format(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n", points);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", kLeft + 10,
                       kTop + 14 + 14 * s, kColors[s % 4], escape(series[s].name));
  }
  return out + "</svg>\n";
}

std::string line_plot(const Axes& axes, const std::vector<LineSeries>& series) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double lo = x_lo, hi = x_hi;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      lo = std::min(lo, i < s.lower.size() ? s.lower[i] : s.y[i]);
      hi = std::max(hi, i < s.upper.size() ? s.upper[i] : s.y[i]);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, lo = 0, hi = 1;
  const Scale x{x_lo, x_hi, kLeft, kWidth - kRight};
  const Scale y = y_scale(axes, lo, hi);
  std::string out = header(axes) + y_axis(y);
  for (int i = 0; i <= 4; ++i) {
    const double v = x_lo + (x_hi - x_lo) * i / 4.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", x(v),
                       kHeight - kBottom + 16, v);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& line = series[s];
    const char* color = kColors[s % 4];
    if (line.lower.size() == line.x.size() && line.upper.size() == line.x.size() &&
        !line.x.empty()) {
      std::string band;
      for (std::size_t i = 0; i < line.x.size(); ++i) {
        band += fmt::format("{:.1f},{:.1f} ", x(line.x[i]), y(line.upper[i]));
      }
      for (std::size_t i = line.x.size(); i-- > 0;) {
        band += fmt::format("{:.1f},{:.1f} ", x(line.x[i]), y(line.lower[i]));
      }
      out += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\"/>\n", band, color);
    }
    std::string points;
    for (std::size_t i = 0; i < line.x.size(); ++i) {
      points += fmt::format("{:.1f},{:.1f} ", x(line.x[i]), y(line.y[i]));
    }
    out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       points, color);
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", kLeft + 10,
                       kTop + 14 + 14 * s, color, escape(line.name));
  }
  return out + "</svg>\n";
}

}  // namespace purrfect::svg
