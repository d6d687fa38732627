#pragma once

// Minimal SVG line chart for sweep curves: one polyline per curve, linear
// axes with ticks, legend. Pd is always on the y axis in [0, 1].

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "specsense/montecarlo.hpp"

namespace specsense {

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label = "Pd";
};

inline void write_svg_plot(const std::vector<SweepResult>& curves, const PlotSpec& spec, std::ostream& os) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  double x_min = 0.0, x_max = 1.0;
  bool first = true;
  for (const auto& c : curves)
    for (const auto& r : c.rows) {
      x_min = first ? r.sweep_value : std::min(x_min, r.sweep_value);
      x_max = first ? r.sweep_value : std::max(x_max, r.sweep_value);
      first = false;
    }
  if (x_max == x_min) x_max = x_min + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - y) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << spec.title
     << "</text>\n";
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
     << "\" height=\"" << ph << "\"/></g>\n";

  os << "<g font-size=\"11\" stroke=\"#ccc\">\n";
  for (int i = 0; i <= 10; ++i) {
    const double y = i / 10.0;
    os << "<line x1=\"" << kLeft << "\" y1=\"" << sy(y) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << sy(y)
       << "\"/>";
    os << "<text stroke=\"none\" x=\"" << kLeft - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">"
       << format_double(y) << "</text>\n";
  }
  for (int i = 0; i <= 10; ++i) {
    const double x = x_min + (x_max - x_min) * i / 10.0;
    const double rounded = std::round(x * 1000.0) / 1000.0;
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << kTop + ph + 5
       << "\"/>";
    os << "<text stroke=\"none\" x=\"" << sx(x) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
       << format_double(rounded) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << spec.x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << kTop + ph / 2
     << ")\" text-anchor=\"middle\">" << spec.y_label << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline class=\"curve\" data-label=\"" << curves[i].label << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : curves[i].rows) os << sx(r.sweep_value) << ',' << sy(r.pd) << ' ';
    os << "\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(i);
    os << "<line x1=\"" << kLeft + pw - 90 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw - 70 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << kLeft + pw - 65 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << curves[i].label
       << "</text>\n";
  }
  os << "</svg>\n";
}

inline void write_svg_plot(const std::vector<SweepResult>& curves, const PlotSpec& spec,
                           const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_svg_plot: cannot open '" + path.string() + "' for writing");
  write_svg_plot(curves, spec, os);
  if (!os) throw std::runtime_error("write_svg_plot: write to '" + path.string() + "' failed");
}

}  // namespace specsense
