#pragma once

#include <string>
#include <vector>

#include "edgepaint/imaging/image.hpp"

namespace ep {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

// Minimal raster line plot: axes, ticks with a builtin 3x5 digit font,
// one coloured polyline per series. Written as an rgb PNG.
void render_line_plot(const std::vector<PlotSeries>& series,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& path);

}  // namespace ep
