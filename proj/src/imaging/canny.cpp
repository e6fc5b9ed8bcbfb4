#include "edgepaint/imaging/canny.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ep {

namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Separable gaussian with replicated borders.
std::vector<double> gaussian_blur(const std::vector<double>& src, int h, int w,
                                  double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * src[size_t(y) * w + clampi(x + i, 0, w - 1)];
      tmp[size_t(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp[size_t(clampi(y + i, 0, h - 1)) * w + x];
      out[size_t(y) * w + x] = acc;
    }
  return out;
}

}  // namespace

Image canny_edges(const Image& gray, double sigma, double low, double high) {
  if (gray.kind() != ImageKind::Gray)
    throw FormatError("canny_edges: input must be grayscale");
  if (sigma < 0.0)
    throw ConfigError("canny_edges: sigma must be >= 0");
  if (!(low > 0.0) || !(low < high))
    throw ConfigError("canny_edges: thresholds require 0 < low < high");

  const int h = gray.height(), w = gray.width();
  std::vector<double> unit(gray.size());
  for (size_t i = 0; i < unit.size(); ++i)
    unit[i] = gray.range() == Range::Unit ? gray.values()[i]
                                          : (gray.values()[i] + 1.0) / 2.0;

  const std::vector<double> smooth = gaussian_blur(unit, h, w, sigma);

  std::vector<double> gx(smooth.size()), gy(smooth.size()), mag(smooth.size());
  auto px = [&](int y, int x) {
    return smooth[size_t(clampi(y, 0, h - 1)) * w + clampi(x, 0, w - 1)];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = (px(y - 1, x + 1) - px(y - 1, x - 1)) +
                        2.0 * (px(y, x + 1) - px(y, x - 1)) +
                        (px(y + 1, x + 1) - px(y + 1, x - 1));
      const double sy = (px(y + 1, x - 1) - px(y - 1, x - 1)) +
                        2.0 * (px(y + 1, x) - px(y - 1, x)) +
                        (px(y + 1, x + 1) - px(y - 1, x + 1));
      gx[size_t(y) * w + x] = sx;
      gy[size_t(y) * w + x] = sy;
      mag[size_t(y) * w + x] = std::sqrt(sx * sx + sy * sy);
    }

  // Non-maximum suppression over 4 quantized directions. The comparison is
  // strict toward the "previous" neighbour so plateaus thin to one pixel.
  std::vector<double> thin(mag.size(), 0.0);
  constexpr double kTan67 = 2.414213562373095;  // tan(67.5 deg)
  auto mag_at = [&](int y, int x) {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return mag[size_t(y) * w + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = size_t(y) * w + x;
      if (mag[i] == 0.0) continue;
      const double ax = std::abs(gx[i]), ay = std::abs(gy[i]);
      int dy, dx;
      if (ax > kTan67 * ay) {
        dy = 0; dx = 1;
      } else if (ay > kTan67 * ax) {
        dy = 1; dx = 0;
      } else if (gx[i] * gy[i] > 0) {
        dy = 1; dx = 1;
      } else {
        dy = 1; dx = -1;
      }
      const double before = mag_at(y - dy, x - dx);
      const double after = mag_at(y + dy, x + dx);
      if (mag[i] > before && mag[i] >= after) thin[i] = mag[i];
    }

  // Double-threshold hysteresis, 8-connected.
  Image out(h, w, ImageKind::Edge, Range::Unit);
  std::vector<size_t> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = size_t(y) * w + x;
      if (thin[i] >= high && out.values()[i] == 0.0) {
        out.values()[i] = 1.0;
        stack.push_back(i);
        while (!stack.empty()) {
          const size_t j = stack.back();
          stack.pop_back();
          const int jy = int(j / w), jx = int(j % w);
          for (int ny = jy - 1; ny <= jy + 1; ++ny)
            for (int nx = jx - 1; nx <= jx + 1; ++nx) {
              if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
              const size_t k = size_t(ny) * w + nx;
              if (out.values()[k] == 0.0 && thin[k] >= low) {
                out.values()[k] = 1.0;
                stack.push_back(k);
              }
            }
        }
      }
    }
  return out;
}

}  // namespace ep
