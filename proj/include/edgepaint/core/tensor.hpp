#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ep {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NCHW shape. Scalars are {1,1,1,1}.
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  std::int64_t size() const {
    return std::int64_t(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + "]";
  }
};

// Dense double-precision NCHW tensor. Value semantics throughout; the
// networks are small enough that copies are never the bottleneck.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(s), v(static_cast<size_t>(s.size()), fill) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
      throw ShapeError("tensor dims must be >= 1, got " + s.str());
  }

  static Tensor zeros(Shape s) { return Tensor(s, 0.0); }
  static Tensor full(Shape s, double x) { return Tensor(s, x); }
  static Tensor scalar(double x) { return Tensor(Shape{1, 1, 1, 1}, x); }

  double& at(int n, int c, int h, int w) {
    return v[idx(n, c, h, w)];
  }
  double at(int n, int c, int h, int w) const {
    return v[idx(n, c, h, w)];
  }
  size_t idx(int n, int c, int h, int w) const {
    assert(n < shape.n && c < shape.c && h < shape.h && w < shape.w);
    return ((size_t(n) * shape.c + c) * shape.h + h) * shape.w + w;
  }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  double& operator[](size_t i) { return v[i]; }
  double operator[](size_t i) const { return v[i]; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  Shape shape{};
  std::vector<double> v;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape == b.shape))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape.str() +
                     " vs " + b.shape.str());
}

}  // namespace ep
