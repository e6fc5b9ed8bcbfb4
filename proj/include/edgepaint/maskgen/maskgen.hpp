#pragma once

#include <string>
#include <utility>
#include <vector>

#include "edgepaint/core/rng.hpp"
#include "edgepaint/imaging/image.hpp"

namespace ep {

enum class MaskKind { Rectangular, SaltPepper, Irregular };

std::string mask_kind_name(MaskKind k);
MaskKind mask_kind_from_name(const std::string& name);

struct MaskSpec {
  MaskKind kind = MaskKind::Rectangular;
  double min_frac = 0.05;
  double max_frac = 0.30;
  std::uint64_t seed = 0;
  // Directory of mask rasters, or "procedural" for synthesized strokes.
  std::string irregular_source = "procedural";

  static MaskSpec rectangular(double min_frac = 0.05, double max_frac = 0.30);
  static MaskSpec salt_pepper(double min_frac = 0.05, double max_frac = 0.95);
  static MaskSpec irregular(double min_frac = 0.05, double max_frac = 0.50,
                            std::string source = "procedural");

  void validate() const;
};

// "kind:min:max[:source]", e.g. "rectangular:0.05:0.30".
MaskSpec parse_mask_spec(const std::string& text);
std::string format_mask_spec(const MaskSpec& spec);

// One axis-aligned rectangle of 1s whose area fraction lies in
// [min_frac, max_frac]. Sides are drawn uniformly and resampled until the
// area fits; infeasible bands are rejected up front.
Mask rectangular_mask(int h, int w, const MaskSpec& spec, Rng& rng);

// Exactly round(f*h*w) pixels set, f drawn uniformly in the band, positions
// sampled without replacement.
Mask salt_pepper_mask(int h, int w, const MaskSpec& spec, Rng& rng);

// Corpus mask (random file, binarized, cropped/resized) or procedural
// brush strokes redrawn until coverage lands in the band.
Mask irregular_mask(int h, int w, const MaskSpec& spec, Rng& rng);

Mask generate_mask(int h, int w, const MaskSpec& spec, Rng& rng);

double mask_coverage(const Mask& mask);

// Splits the image into grid×grid tiles and permutes them uniformly.
// Returns the permutation: output tile t holds input tile perm[t].
std::pair<Image, std::vector<int>> jigsaw_shuffle(const Image& img, int grid,
                                                  Rng& rng);
Image jigsaw_apply(const Image& img, int grid, const std::vector<int>& perm);
Image jigsaw_unshuffle(const Image& img, int grid, const std::vector<int>& perm);

}  // namespace ep
