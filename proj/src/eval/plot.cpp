#include "edgepaint/eval/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace ep {

namespace {

// 3x5 glyphs, one row per entry, low 3 bits used.
const std::map<char, std::array<unsigned char, 5>>& font() {
  static const std::map<char, std::array<unsigned char, 5>> f = {
      {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
      {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
      {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
      {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
      {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
      {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
      {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
      {'7', {0b111, 0b001, 0b001, 0b010, 0b010}},
      {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
      {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
      {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
      {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
      {'%', {0b101, 0b001, 0b010, 0b100, 0b101}},
      {'A', {0b111, 0b101, 0b111, 0b101, 0b101}},
      {'B', {0b110, 0b101, 0b110, 0b101, 0b110}},
      {'C', {0b111, 0b100, 0b100, 0b100, 0b111}},
      {'D', {0b110, 0b101, 0b101, 0b101, 0b110}},
      {'E', {0b111, 0b100, 0b111, 0b100, 0b111}},
      {'G', {0b111, 0b100, 0b101, 0b101, 0b111}},
      {'K', {0b101, 0b101, 0b110, 0b101, 0b101}},
      {'L', {0b100, 0b100, 0b100, 0b100, 0b111}},
      {'M', {0b101, 0b111, 0b111, 0b101, 0b101}},
      {'N', {0b101, 0b111, 0b111, 0b111, 0b101}},
      {'O', {0b111, 0b101, 0b101, 0b101, 0b111}},
      {'P', {0b111, 0b101, 0b111, 0b100, 0b100}},
      {'R', {0b111, 0b101, 0b110, 0b101, 0b101}},
      {'S', {0b111, 0b100, 0b111, 0b001, 0b111}},
      {'T', {0b111, 0b010, 0b010, 0b010, 0b010}},
      {'V', {0b101, 0b101, 0b101, 0b101, 0b010}},
      {' ', {0b000, 0b000, 0b000, 0b000, 0b000}},
  };
  return f;
}

struct Rgb {
  double r, g, b;
};

const Rgb kPalette[] = {{0.85, 0.20, 0.20}, {0.15, 0.35, 0.80},
                        {0.10, 0.60, 0.25}, {0.75, 0.50, 0.05},
                        {0.55, 0.15, 0.60}, {0.05, 0.55, 0.60}};

void put_pixel(Image& img, int y, int x, const Rgb& c) {
  if (y < 0 || y >= img.height() || x < 0 || x >= img.width()) return;
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

void draw_line(Image& img, int y0, int x0, int y1, int x1, const Rgb& c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_pixel(img, y0, x0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_text(Image& img, int y, int x, const std::string& text, const Rgb& c,
               int scale = 2) {
  int cx = x;
  for (char raw : text) {
    const char ch = char(std::toupper(static_cast<unsigned char>(raw)));
    const auto it = font().find(ch);
    if (it != font().end()) {
      for (int ry = 0; ry < 5; ++ry)
        for (int rx = 0; rx < 3; ++rx)
          if (it->second[size_t(ry)] & (1 << (2 - rx)))
            for (int sy = 0; sy < scale; ++sy)
              for (int sx = 0; sx < scale; ++sx)
                put_pixel(img, y + ry * scale + sy, cx + rx * scale + sx, c);
    }
    cx += 4 * scale;
  }
}

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

void render_line_plot(const std::vector<PlotSeries>& series,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& path) {
  const int W = 800, H = 600;
  const int ml = 90, mr = 30, mt = 40, mb = 70;
  Image img(H, W, ImageKind::Rgb, Range::Unit, 1.0);  // white background

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto to_px = [&](double x) {
    return ml + int(std::lround((x - xmin) / (xmax - xmin) * (W - ml - mr)));
  };
  auto to_py = [&](double y) {
    return H - mb - int(std::lround((y - ymin) / (ymax - ymin) * (H - mt - mb)));
  };

  const Rgb axis{0.1, 0.1, 0.1};
  draw_line(img, H - mb, ml, H - mb, W - mr, axis);
  draw_line(img, mt, ml, H - mb, ml, axis);

  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    const int px = to_px(xv), py = to_py(yv);
    draw_line(img, H - mb, px, H - mb + 6, px, axis);
    draw_text(img, H - mb + 10, px - 12, format_tick(xv), axis);
    draw_line(img, py, ml - 6, py, ml, axis);
    draw_text(img, py - 5, 10, format_tick(yv), axis);
  }
  draw_text(img, H - 24, ml + (W - ml - mr) / 2 - int(4 * x_label.size()),
            x_label, axis);
  draw_text(img, mt - 24, ml, y_label, axis);

  int legend_y = mt;
  for (size_t si = 0; si < series.size(); ++si) {
    const Rgb& col = kPalette[si % std::size(kPalette)];
    const auto& pts = series[si].points;
    for (size_t i = 0; i + 1 < pts.size(); ++i)
      draw_line(img, to_py(pts[i].second), to_px(pts[i].first),
                to_py(pts[i + 1].second), to_px(pts[i + 1].first), col);
    for (const auto& [x, y] : pts) {
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if (dx * dx + dy * dy <= 4) put_pixel(img, to_py(y) + dy, to_px(x) + dx, col);
    }
    draw_line(img, legend_y + 5, W - mr - 150, legend_y + 5, W - mr - 120, col);
    draw_text(img, legend_y, W - mr - 112, series[si].label, axis);
    legend_y += 18;
  }
  save_image(img, path);
}

}  // namespace ep
