#include "edgepaint/imaging/image.hpp"

#include <algorithm>
#include <cmath>

namespace ep {

Image::Image(int h, int w, ImageKind kind, Range range, double fill)
    : h_(h), w_(w), c_(channels_for(kind)), kind_(kind), range_(range),
      v_(size_t(std::max(h, 0)) * std::max(w, 0) * c_, fill) {
  if (h < 1 || w < 1)
    throw ShapeError("image dims must be >= 1, got " + std::to_string(h) + "x" +
                     std::to_string(w));
}

void Image::validate() const {
  const double lo = range_ == Range::Unit ? 0.0 : -1.0;
  for (double x : v_) {
    if (!std::isfinite(x) || x < lo || x > 1.0)
      throw FormatError("image value " + std::to_string(x) +
                        " outside declared range");
    if (kind_ == ImageKind::Edge && x != 0.0 && x != 1.0)
      throw FormatError("edge image holds non-binary value " +
                        std::to_string(x));
  }
}

Image Image::to_range(Range r) const {
  Image out = *this;
  if (r == range_) return out;
  if (r == Range::Signed) {
    for (double& x : out.v_) x = x * 2.0 - 1.0;
  } else {
    for (double& x : out.v_) x = (x + 1.0) / 2.0;
  }
  out.range_ = r;
  return out;
}

Image Image::with_kind(ImageKind k) const {
  if (channels_for(k) != c_)
    throw ShapeError("with_kind: channel count mismatch");
  Image out = *this;
  out.kind_ = k;
  if (k == ImageKind::Edge)
    for (double x : out.v_)
      if (x != 0.0 && x != 1.0)
        throw FormatError("with_kind(edge): value not in {0,1}");
  return out;
}

std::int64_t Mask::count_ones() const {
  std::int64_t n = 0;
  for (auto b : v_) n += b;
  return n;
}

Image to_grayscale(const Image& rgb) {
  if (rgb.kind() != ImageKind::Rgb)
    throw FormatError("to_grayscale: input must be rgb");
  Image out(rgb.height(), rgb.width(), ImageKind::Gray, rgb.range());
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x)
      out.at(0, y, x) = 0.299 * rgb.at(0, y, x) + 0.587 * rgb.at(1, y, x) +
                        0.114 * rgb.at(2, y, x);
  return out;
}

namespace {
void check_mask_geometry(const Image& img, const Mask& m, const char* op) {
  if (img.height() != m.height() || img.width() != m.width())
    throw ShapeError(std::string(op) + ": image " +
                     std::to_string(img.height()) + "x" +
                     std::to_string(img.width()) + " vs mask " +
                     std::to_string(m.height()) + "x" +
                     std::to_string(m.width()));
}
}  // namespace

Image apply_mask(const Image& img, const Mask& mask) {
  check_mask_geometry(img, mask, "apply_mask");
  Image out = img;
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (mask.at(y, x)) out.at(c, y, x) = 0.0;
  return out;
}

Image compose(const Image& pred, const Image& gt, const Mask& mask) {
  check_mask_geometry(gt, mask, "compose");
  if (!pred.same_geometry(gt) || pred.kind() != gt.kind() ||
      pred.range() != gt.range())
    throw ShapeError("compose: pred/gt kind, range or geometry mismatch");
  Image out = gt;
  for (int c = 0; c < gt.channels(); ++c)
    for (int y = 0; y < gt.height(); ++y)
      for (int x = 0; x < gt.width(); ++x)
        if (mask.at(y, x)) out.at(c, y, x) = pred.at(c, y, x);
  return out;
}

Image threshold_edges(const Image& soft, double threshold) {
  if (soft.channels() != 1)
    throw ShapeError("threshold_edges: input must be single-channel");
  Image out(soft.height(), soft.width(), ImageKind::Edge, Range::Unit);
  for (int y = 0; y < soft.height(); ++y)
    for (int x = 0; x < soft.width(); ++x)
      out.at(0, y, x) = soft.at(0, y, x) >= threshold ? 1.0 : 0.0;
  return out;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t(Shape{1, img.channels(), img.height(), img.width()});
  std::copy_n(img.data(), img.size(), t.data());
  return t;
}

void stack_into_batch(Tensor& batch, int n, const Image& img) {
  const Shape s = batch.shape;
  if (s.c != img.channels() || s.h != img.height() || s.w != img.width() ||
      n >= s.n)
    throw ShapeError("stack_into_batch: slot/geometry mismatch");
  std::copy_n(img.data(), img.size(), batch.data() + size_t(n) * img.size());
}

Image tensor_to_image(const Tensor& t, int n, ImageKind kind, Range range,
                      bool clamp) {
  const Shape s = t.shape;
  if (s.c != Image::channels_for(kind) || n >= s.n)
    throw ShapeError("tensor_to_image: channel/slot mismatch");
  Image out(s.h, s.w, kind, range);
  const double lo = range == Range::Unit ? 0.0 : -1.0;
  const double* src = t.data() + size_t(n) * s.c * s.h * s.w;
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = clamp ? std::clamp(src[i], lo, 1.0) : src[i];
  return out;
}

Tensor mask_to_tensor(const Mask& mask) {
  Tensor t(Shape{1, 1, mask.height(), mask.width()});
  for (size_t i = 0; i < mask.size(); ++i) t[i] = mask.values()[i];
  return t;
}

}  // namespace ep
