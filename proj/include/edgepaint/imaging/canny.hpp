#pragma once

#include "edgepaint/imaging/image.hpp"

namespace ep {

struct CannyConfig {
  double sigma = 2.0;
  double low = 0.1;
  double high = 0.2;
};

// Classic canny pipeline: gaussian smoothing, sobel gradients, non-maximum
// suppression, double-threshold hysteresis. Thresholds apply to the raw
// sobel magnitude of the unit-range input. Deterministic for fixed inputs.
Image canny_edges(const Image& gray, double sigma, double low, double high);

inline Image canny_edges(const Image& gray, const CannyConfig& cfg) {
  return canny_edges(gray, cfg.sigma, cfg.low, cfg.high);
}

}  // namespace ep
