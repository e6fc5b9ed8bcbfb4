#include <algorithm>
#include <cmath>
#include <memory>

#include "edgepaint/core/autodiff.hpp"
#include "edgepaint/core/parallel.hpp"

namespace ep::ag {

namespace {

Var make_node(Tensor val, std::vector<Var> inputs, const char* op) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->inputs = std::move(inputs);
  n->op = op;
  for (const auto& in : n->inputs)
    if (in && in->requires_grad) n->requires_grad = true;
  return n;
}

inline int ceil_div(int a, int b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

// Valid output range [lo, hi) for which in = out*stride - pad + k_off lands
// inside [0, in_size).
inline void valid_range(int out_size, int in_size, int stride, int pad,
                        int k_off, int& lo, int& hi) {
  lo = std::max(0, ceil_div(pad - k_off, stride));
  hi = std::min(out_size, (in_size - 1 + pad - k_off) / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
           int dilation) {
  const Shape xs = x->val.shape, ws = w->val.shape;
  const int N = xs.n, IC = xs.c, IH = xs.h, IW = xs.w;
  const int OC = ws.n, KH = ws.h, KW = ws.w;
  if (ws.c != IC)
    throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                     " input channels, got " + std::to_string(IC));
  const int OH = (IH + 2 * pad - dilation * (KH - 1) - 1) / stride + 1;
  const int OW = (IW + 2 * pad - dilation * (KW - 1) - 1) / stride + 1;
  if (OH < 1 || OW < 1)
    throw ShapeError("conv2d: output would be empty for input " + xs.str());

  Tensor out(Shape{N, OC, OH, OW});
  const double* xd = x->val.data();
  const double* wd = w->val.data();
  const double* bd = b ? b->val.data() : nullptr;
  double* od = out.data();

  parallel_for(0, std::int64_t(N) * OC, [&](std::int64_t t) {
    const int n = int(t / OC), oc = int(t % OC);
    double* oplane = od + (size_t(n) * OC + oc) * OH * OW;
    const double bias = bd ? bd[oc] : 0.0;
    std::fill(oplane, oplane + size_t(OH) * OW, bias);
    for (int ic = 0; ic < IC; ++ic) {
      const double* xplane = xd + (size_t(n) * IC + ic) * IH * IW;
      const double* wrow = wd + ((size_t(oc) * IC + ic) * KH) * KW;
      for (int kh = 0; kh < KH; ++kh)
        for (int kw = 0; kw < KW; ++kw) {
          const double wv = wrow[kh * KW + kw];
          if (wv == 0.0) continue;
          int oh_lo, oh_hi, ow_lo, ow_hi;
          valid_range(OH, IH, stride, pad, kh * dilation, oh_lo, oh_hi);
          valid_range(OW, IW, stride, pad, kw * dilation, ow_lo, ow_hi);
          for (int oh = oh_lo; oh < oh_hi; ++oh) {
            const int ih = oh * stride - pad + kh * dilation;
            const double* xr = xplane + size_t(ih) * IW;
            double* orow = oplane + size_t(oh) * OW;
            int iw = ow_lo * stride - pad + kw * dilation;
            for (int ow = ow_lo; ow < ow_hi; ++ow, iw += stride)
              orow[ow] += wv * xr[iw];
          }
        }
    }
  });

  std::vector<Var> ins = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  auto node = make_node(std::move(out), std::move(ins), "conv2d");
  if (!node->requires_grad) return node;

  node->backward_fn = [x, w, b, stride, pad, dilation, N, IC, IH, IW, OC, KH,
                       KW, OH, OW](Node& self) {
    const double* gd = self.grad.data();
    const double* xd = x->val.data();
    const double* wd = w->val.data();

    if (x->requires_grad) {
      x->ensure_grad();
      double* dx = x->grad.data();
      parallel_for(0, std::int64_t(N) * IC, [&](std::int64_t t) {
        const int n = int(t / IC), ic = int(t % IC);
        double* dxplane = dx + (size_t(n) * IC + ic) * IH * IW;
        for (int oc = 0; oc < OC; ++oc) {
          const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
          const double* wrow = wd + ((size_t(oc) * IC + ic) * KH) * KW;
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw) {
              const double wv = wrow[kh * KW + kw];
              if (wv == 0.0) continue;
              int oh_lo, oh_hi, ow_lo, ow_hi;
              valid_range(OH, IH, stride, pad, kh * dilation, oh_lo, oh_hi);
              valid_range(OW, IW, stride, pad, kw * dilation, ow_lo, ow_hi);
              for (int oh = oh_lo; oh < oh_hi; ++oh) {
                const int ih = oh * stride - pad + kh * dilation;
                double* dxr = dxplane + size_t(ih) * IW;
                const double* grow = gplane + size_t(oh) * OW;
                int iw = ow_lo * stride - pad + kw * dilation;
                for (int ow = ow_lo; ow < ow_hi; ++ow, iw += stride)
                  dxr[iw] += wv * grow[ow];
              }
            }
        }
      });
    }

    if (w->requires_grad) {
      w->ensure_grad();
      double* dw = w->grad.data();
      parallel_for(0, OC, [&](std::int64_t oc) {
        for (int ic = 0; ic < IC; ++ic)
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw) {
              int oh_lo, oh_hi, ow_lo, ow_hi;
              valid_range(OH, IH, stride, pad, kh * dilation, oh_lo, oh_hi);
              valid_range(OW, IW, stride, pad, kw * dilation, ow_lo, ow_hi);
              double acc = 0.0;
              for (int n = 0; n < N; ++n) {
                const double* xplane = xd + (size_t(n) * IC + ic) * IH * IW;
                const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                  const int ih = oh * stride - pad + kh * dilation;
                  const double* xr = xplane + size_t(ih) * IW;
                  const double* grow = gplane + size_t(oh) * OW;
                  int iw = ow_lo * stride - pad + kw * dilation;
                  for (int ow = ow_lo; ow < ow_hi; ++ow, iw += stride)
                    acc += xr[iw] * grow[ow];
                }
              }
              dw[((size_t(oc) * IC + ic) * KH + kh) * KW + kw] += acc;
            }
      });
    }

    if (b && b->requires_grad) {
      b->ensure_grad();
      double* db = b->grad.data();
      for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < OC; ++oc) {
          const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
          double acc = 0.0;
          for (size_t i = 0; i < size_t(OH) * OW; ++i) acc += gplane[i];
          db[oc] += acc;
        }
    }
  };
  return node;
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad) {
  const Shape xs = x->val.shape, ws = w->val.shape;
  const int N = xs.n, IC = xs.c, IH = xs.h, IW = xs.w;
  const int OC = ws.c, KH = ws.h, KW = ws.w;
  if (ws.n != IC)
    throw ShapeError("conv_transpose2d: weight expects " + std::to_string(ws.n) +
                     " input channels, got " + std::to_string(IC));
  const int OH = (IH - 1) * stride - 2 * pad + KH;
  const int OW = (IW - 1) * stride - 2 * pad + KW;
  if (OH < 1 || OW < 1)
    throw ShapeError("conv_transpose2d: output would be empty");

  Tensor out(Shape{N, OC, OH, OW});
  const double* xd = x->val.data();
  const double* wd = w->val.data();
  const double* bd = b ? b->val.data() : nullptr;
  double* od = out.data();

  parallel_for(0, std::int64_t(N) * OC, [&](std::int64_t t) {
    const int n = int(t / OC), oc = int(t % OC);
    double* oplane = od + (size_t(n) * OC + oc) * OH * OW;
    const double bias = bd ? bd[oc] : 0.0;
    std::fill(oplane, oplane + size_t(OH) * OW, bias);
    for (int ic = 0; ic < IC; ++ic) {
      const double* xplane = xd + (size_t(n) * IC + ic) * IH * IW;
      const double* wrow = wd + ((size_t(ic) * OC + oc) * KH) * KW;
      for (int kh = 0; kh < KH; ++kh)
        for (int kw = 0; kw < KW; ++kw) {
          const double wv = wrow[kh * KW + kw];
          if (wv == 0.0) continue;
          // oh = ih*stride - pad + kh must land inside [0, OH)
          int ih_lo, ih_hi, iw_lo, iw_hi;
          valid_range(IH, OH, stride, pad, kh, ih_lo, ih_hi);
          valid_range(IW, OW, stride, pad, kw, iw_lo, iw_hi);
          for (int ih = ih_lo; ih < ih_hi; ++ih) {
            const int oh = ih * stride - pad + kh;
            const double* xr = xplane + size_t(ih) * IW;
            double* orow = oplane + size_t(oh) * OW;
            int ow = iw_lo * stride - pad + kw;
            for (int iw = iw_lo; iw < iw_hi; ++iw, ow += stride)
              orow[ow] += wv * xr[iw];
          }
        }
    }
  });

  std::vector<Var> ins = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  auto node = make_node(std::move(out), std::move(ins), "conv_transpose2d");
  if (!node->requires_grad) return node;

  node->backward_fn = [x, w, b, stride, pad, N, IC, IH, IW, OC, KH, KW, OH,
                       OW](Node& self) {
    const double* gd = self.grad.data();
    const double* xd = x->val.data();
    const double* wd = w->val.data();

    if (x->requires_grad) {
      x->ensure_grad();
      double* dx = x->grad.data();
      parallel_for(0, std::int64_t(N) * IC, [&](std::int64_t t) {
        const int n = int(t / IC), ic = int(t % IC);
        double* dxplane = dx + (size_t(n) * IC + ic) * IH * IW;
        for (int oc = 0; oc < OC; ++oc) {
          const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
          const double* wrow = wd + ((size_t(ic) * OC + oc) * KH) * KW;
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw) {
              const double wv = wrow[kh * KW + kw];
              if (wv == 0.0) continue;
              int ih_lo, ih_hi, iw_lo, iw_hi;
              valid_range(IH, OH, stride, pad, kh, ih_lo, ih_hi);
              valid_range(IW, OW, stride, pad, kw, iw_lo, iw_hi);
              for (int ih = ih_lo; ih < ih_hi; ++ih) {
                const int oh = ih * stride - pad + kh;
                double* dxr = dxplane + size_t(ih) * IW;
                const double* grow = gplane + size_t(oh) * OW;
                int ow = iw_lo * stride - pad + kw;
                for (int iw = iw_lo; iw < iw_hi; ++iw, ow += stride)
                  dxr[iw] += wv * grow[ow];
              }
            }
        }
      });
    }

    if (w->requires_grad) {
      w->ensure_grad();
      double* dw = w->grad.data();
      parallel_for(0, IC, [&](std::int64_t ic) {
        for (int oc = 0; oc < OC; ++oc)
          for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw) {
              int ih_lo, ih_hi, iw_lo, iw_hi;
              valid_range(IH, OH, stride, pad, kh, ih_lo, ih_hi);
              valid_range(IW, OW, stride, pad, kw, iw_lo, iw_hi);
              double acc = 0.0;
              for (int n = 0; n < N; ++n) {
                const double* xplane = xd + (size_t(n) * IC + ic) * IH * IW;
                const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
                for (int ih = ih_lo; ih < ih_hi; ++ih) {
                  const int oh = ih * stride - pad + kh;
                  const double* xr = xplane + size_t(ih) * IW;
                  const double* grow = gplane + size_t(oh) * OW;
                  int ow = iw_lo * stride - pad + kw;
                  for (int iw = iw_lo; iw < iw_hi; ++iw, ow += stride)
                    acc += xr[iw] * grow[ow];
                }
              }
              dw[((size_t(ic) * OC + oc) * KH + kh) * KW + kw] += acc;
            }
      });
    }

    if (b && b->requires_grad) {
      b->ensure_grad();
      double* db = b->grad.data();
      for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < OC; ++oc) {
          const double* gplane = gd + (size_t(n) * OC + oc) * OH * OW;
          double acc = 0.0;
          for (size_t i = 0; i < size_t(OH) * OW; ++i) acc += gplane[i];
          db[oc] += acc;
        }
    }
  };
  return node;
}

Var maxpool2d(const Var& x, int k, int stride) {
  const Shape s = x->val.shape;
  const int OH = (s.h - k) / stride + 1;
  const int OW = (s.w - k) / stride + 1;
  if (OH < 1 || OW < 1) throw ShapeError("maxpool2d: input too small");
  Tensor out(Shape{s.n, s.c, OH, OW});
  auto argmax = std::make_shared<std::vector<size_t>>(out.size());
  size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow, ++o) {
          size_t best = x->val.idx(n, c, oh * stride, ow * stride);
          double bv = x->val[best];
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const size_t i =
                  x->val.idx(n, c, oh * stride + kh, ow * stride + kw);
              if (x->val[i] > bv) {
                bv = x->val[i];
                best = i;
              }
            }
          out[o] = bv;
          (*argmax)[o] = best;
        }
  auto node = make_node(std::move(out), {x}, "maxpool2d");
  if (node->requires_grad) {
    node->backward_fn = [x, argmax](Node& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (size_t o = 0; o < self.grad.size(); ++o)
        x->grad[(*argmax)[o]] += self.grad[o];
    };
  }
  return node;
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  const Shape s = x->val.shape;
  if (s.h == out_h && s.w == out_w) {
    // same-size resample is the identity
    auto node = make_node(x->val, {x}, "resize_id");
    if (node->requires_grad) {
      node->backward_fn = [x](Node& self) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          x->grad[i] += self.grad[i];
      };
    }
    return node;
  }
  const double sh = double(s.h) / out_h, sw = double(s.w) / out_w;
  struct Tap {
    int i0, i1;
    double w1;  // weight of i1; i0 gets 1-w1
  };
  auto make_taps = [](int out_n, int in_n, double sc) {
    std::vector<Tap> taps(out_n);
    for (int o = 0; o < out_n; ++o) {
      double src = (o + 0.5) * sc - 0.5;
      src = std::clamp(src, 0.0, double(in_n - 1));
      const int i0 = int(std::floor(src));
      taps[o] = {i0, std::min(i0 + 1, in_n - 1), src - i0};
    }
    return taps;
  };
  auto ytap = std::make_shared<std::vector<Tap>>(make_taps(out_h, s.h, sh));
  auto xtap = std::make_shared<std::vector<Tap>>(make_taps(out_w, s.w, sw));

  Tensor out(Shape{s.n, s.c, out_h, out_w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oh = 0; oh < out_h; ++oh) {
        const Tap ty = (*ytap)[oh];
        for (int ow = 0; ow < out_w; ++ow) {
          const Tap tx = (*xtap)[ow];
          const double v00 = x->val.at(n, c, ty.i0, tx.i0);
          const double v01 = x->val.at(n, c, ty.i0, tx.i1);
          const double v10 = x->val.at(n, c, ty.i1, tx.i0);
          const double v11 = x->val.at(n, c, ty.i1, tx.i1);
          out.at(n, c, oh, ow) = (1 - ty.w1) * ((1 - tx.w1) * v00 + tx.w1 * v01) +
                                 ty.w1 * ((1 - tx.w1) * v10 + tx.w1 * v11);
        }
      }
  auto node = make_node(std::move(out), {x}, "resize_bilinear");
  if (node->requires_grad) {
    node->backward_fn = [x, ytap, xtap, s, out_h, out_w](Node& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          for (int oh = 0; oh < out_h; ++oh) {
            const Tap ty = (*ytap)[oh];
            for (int ow = 0; ow < out_w; ++ow) {
              const Tap tx = (*xtap)[ow];
              const double g = self.grad.at(n, c, oh, ow);
              x->grad.at(n, c, ty.i0, tx.i0) += g * (1 - ty.w1) * (1 - tx.w1);
              x->grad.at(n, c, ty.i0, tx.i1) += g * (1 - ty.w1) * tx.w1;
              x->grad.at(n, c, ty.i1, tx.i0) += g * ty.w1 * (1 - tx.w1);
              x->grad.at(n, c, ty.i1, tx.i1) += g * ty.w1 * tx.w1;
            }
          }
    };
  }
  return node;
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Shape s = x->val.shape;
  if (gamma->val.shape.c != s.c || beta->val.shape.c != s.c)
    throw ShapeError("instance_norm: affine params must have C = " +
                     std::to_string(s.c));
  const int m = s.h * s.w;
  auto xhat = std::make_shared<Tensor>(s);
  auto inv_std = std::make_shared<Tensor>(Shape{s.n, s.c, 1, 1});
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x->val.data() + (size_t(n) * s.c + c) * m;
      double mu = 0.0;
      for (int i = 0; i < m; ++i) mu += xp[i];
      mu /= m;
      double var = 0.0;
      for (int i = 0; i < m; ++i) var += (xp[i] - mu) * (xp[i] - mu);
      var /= m;
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std->at(n, c, 0, 0) = is;
      const double g = gamma->val.at(0, c, 0, 0), be = beta->val.at(0, c, 0, 0);
      double* xh = xhat->data() + (size_t(n) * s.c + c) * m;
      double* op = out.data() + (size_t(n) * s.c + c) * m;
      for (int i = 0; i < m; ++i) {
        xh[i] = (xp[i] - mu) * is;
        op[i] = g * xh[i] + be;
      }
    }
  auto node = make_node(std::move(out), {x, gamma, beta}, "instance_norm");
  if (!node->requires_grad) return node;
  node->backward_fn = [x, gamma, beta, s, m, xhat, inv_std](Node& self) {
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const double* gr = self.grad.data() + (size_t(n) * s.c + c) * m;
        const double* xh = xhat->data() + (size_t(n) * s.c + c) * m;
        const double g = gamma->val.at(0, c, 0, 0);
        if (gamma->requires_grad) {
          gamma->ensure_grad();
          double acc = 0.0;
          for (int i = 0; i < m; ++i) acc += gr[i] * xh[i];
          gamma->grad.at(0, c, 0, 0) += acc;
        }
        if (beta->requires_grad) {
          beta->ensure_grad();
          double acc = 0.0;
          for (int i = 0; i < m; ++i) acc += gr[i];
          beta->grad.at(0, c, 0, 0) += acc;
        }
        if (x->requires_grad) {
          x->ensure_grad();
          const double is = inv_std->at(n, c, 0, 0);
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (int i = 0; i < m; ++i) {
            mean_dxh += gr[i] * g;
            mean_dxh_xh += gr[i] * g * xh[i];
          }
          mean_dxh /= m;
          mean_dxh_xh /= m;
          double* dx = x->grad.data() + (size_t(n) * s.c + c) * m;
          for (int i = 0; i < m; ++i)
            dx[i] += is * (gr[i] * g - mean_dxh - xh[i] * mean_dxh_xh);
        }
      }
  };
  return node;
}

}  // namespace ep::ag
