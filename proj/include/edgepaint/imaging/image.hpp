#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgepaint/core/errors.hpp"
#include "edgepaint/core/tensor.hpp"

namespace ep {

// Declared value range of an image's samples.
enum class Range { Unit, Signed };  // [0,1] / [-1,1]

enum class ImageKind { Rgb, Gray, Edge };

// Planar CHW raster. `Edge` images hold exactly {0,1}.
class Image {
 public:
  Image() = default;
  Image(int h, int w, ImageKind kind, Range range, double fill = 0.0);

  static int channels_for(ImageKind k) { return k == ImageKind::Rgb ? 3 : 1; }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  ImageKind kind() const { return kind_; }
  Range range() const { return range_; }

  double& at(int c, int y, int x) { return v_[(size_t(c) * h_ + y) * w_ + x]; }
  double at(int c, int y, int x) const { return v_[(size_t(c) * h_ + y) * w_ + x]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  size_t size() const { return v_.size(); }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  // Throws ShapeError/FormatError if a declared invariant is broken.
  void validate() const;

  // Explicit range conversions; converting to the current range is a copy.
  Image to_range(Range r) const;

  // Re-tags a single-channel image (gray <-> edge). Edge targets are
  // validated as strictly binary.
  Image with_kind(ImageKind k) const;

  bool same_geometry(const Image& o) const {
    return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }

 private:
  int h_ = 0, w_ = 0, c_ = 0;
  ImageKind kind_ = ImageKind::Gray;
  Range range_ = Range::Unit;
  std::vector<double> v_;
};

// Binary H×W mask; 1 marks the missing region, 0 the background.
class Mask {
 public:
  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : h_(h), w_(w), v_(size_t(h) * w, fill) {}

  int height() const { return h_; }
  int width() const { return w_; }
  std::uint8_t& at(int y, int x) { return v_[size_t(y) * w_ + x]; }
  std::uint8_t at(int y, int x) const { return v_[size_t(y) * w_ + x]; }
  const std::vector<std::uint8_t>& values() const { return v_; }
  std::vector<std::uint8_t>& values() { return v_; }
  size_t size() const { return v_.size(); }

  std::int64_t count_ones() const;
  double coverage() const {
    return v_.empty() ? 0.0 : double(count_ones()) / double(v_.size());
  }

 private:
  int h_ = 0, w_ = 0;
  std::vector<std::uint8_t> v_;
};

// I/O: lossless 8-bit PNG. Pixels map affinely between [0,255] and the
// declared range. Masks are stored with 255 = masked, 0 = background.
Image load_image(const std::string& path, Range range);
void save_image(const Image& img, const std::string& path);
Mask load_mask(const std::string& path);
void save_mask(const Mask& mask, const std::string& path);

// ITU-R BT.601 luma weights.
Image to_grayscale(const Image& rgb);

// img ⊙ (1 - M): masked pixels become the range's zero element.
Image apply_mask(const Image& img, const Mask& mask);

// gt ⊙ (1 - M) + pred ⊙ M, bit-exact on both sides of the mask.
Image compose(const Image& pred, const Image& gt, const Mask& mask);

// Binarize a soft map at `threshold` into an edge image.
Image threshold_edges(const Image& soft, double threshold = 0.5);

// ---- tensor bridging (NCHW batches, one image per slot) ----
Tensor image_to_tensor(const Image& img);
void stack_into_batch(Tensor& batch, int n, const Image& img);
Image tensor_to_image(const Tensor& t, int n, ImageKind kind, Range range,
                      bool clamp = true);
Tensor mask_to_tensor(const Mask& mask);

}  // namespace ep
