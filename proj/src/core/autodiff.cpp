#include "edgepaint/core/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

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

// Strides with 0 on broadcast dims so one flat loop covers both layouts.
struct BcastIdx {
  std::int64_t sn, sc, sh, sw;
  BcastIdx(const Shape& full, const Shape& b) {
    if ((b.n != full.n && b.n != 1) || (b.c != full.c && b.c != 1) ||
        (b.h != full.h && b.h != 1) || (b.w != full.w && b.w != 1))
      throw ShapeError("broadcast: incompatible shapes " + full.str() +
                       " vs " + b.str());
    std::int64_t stride = 1;
    sw = (b.w == 1) ? 0 : stride;
    stride *= b.w;
    sh = (b.h == 1) ? 0 : stride;
    stride *= b.h;
    sc = (b.c == 1) ? 0 : stride;
    stride *= b.c;
    sn = (b.n == 1) ? 0 : stride;
  }
  std::int64_t operator()(int n, int c, int h, int w) const {
    return n * sn + c * sc + h * sh + w * sw;
  }
};

template <class Fwd, class Bwd>
Var unary_pointwise(const Var& a, const char* op, Fwd f, Bwd dfdx_from_xy) {
  Tensor out(a->val.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(a->val[i]);
  auto n = make_node(std::move(out), {a}, op);
  if (n->requires_grad) {
    n->backward_fn = [a, dfdx_from_xy](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        a->grad[i] += self.grad[i] * dfdx_from_xy(a->val[i], self.val[i]);
    };
  }
  return n;
}

}  // namespace

Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->op = "const";
  return n;
}

Var leaf(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = true;
  n->op = "leaf";
  return n;
}

void backward(const Var& root) {
  if (root->val.size() != 1)
    throw ShapeError("backward: root must be a scalar");
  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && !seen.count(child)) {
        seen.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad.fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->requires_grad && !n->grad.empty())
      n->backward_fn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a->val, b->val, "add");
  Tensor out(a->val.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->val[i] + b->val[i];
  auto n = make_node(std::move(out), {a, b}, "add");
  if (n->requires_grad) {
    n->backward_fn = [a, b](Node& self) {
      for (const auto& x : {a, b}) {
        if (!x->requires_grad) continue;
        x->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          x->grad[i] += self.grad[i];
      }
    };
  }
  return n;
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a->val, b->val, "sub");
  Tensor out(a->val.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->val[i] - b->val[i];
  auto n = make_node(std::move(out), {a, b}, "sub");
  if (n->requires_grad) {
    n->backward_fn = [a, b](Node& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          b->grad[i] -= self.grad[i];
      }
    };
  }
  return n;
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a->val, b->val, "mul");
  Tensor out(a->val.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->val[i] * b->val[i];
  auto n = make_node(std::move(out), {a, b}, "mul");
  if (n->requires_grad) {
    n->backward_fn = [a, b](Node& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          a->grad[i] += self.grad[i] * b->val[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          b->grad[i] += self.grad[i] * a->val[i];
      }
    };
  }
  return n;
}

namespace {

template <bool Multiply>
Var bcast_binary(const Var& a, const Var& b, const char* op) {
  const Shape s = a->val.shape;
  const BcastIdx bi(s, b->val.shape);
  Tensor out(s);
  std::int64_t i = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w, ++i) {
          const double bv = b->val[bi(n, c, h, w)];
          out[i] = Multiply ? a->val[i] * bv : a->val[i] + bv;
        }
  auto node = make_node(std::move(out), {a, b}, op);
  if (node->requires_grad) {
    node->backward_fn = [a, b, bi, s](Node& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        std::int64_t i = 0;
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
              for (int w = 0; w < s.w; ++w, ++i)
                a->grad[i] += Multiply ? self.grad[i] * b->val[bi(n, c, h, w)]
                                       : self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        std::int64_t i = 0;
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
              for (int w = 0; w < s.w; ++w, ++i)
                b->grad[bi(n, c, h, w)] +=
                    Multiply ? self.grad[i] * a->val[i] : self.grad[i];
      }
    };
  }
  return node;
}

}  // namespace

Var bmul(const Var& a, const Var& b) { return bcast_binary<true>(a, b, "bmul"); }
Var badd(const Var& a, const Var& b) { return bcast_binary<false>(a, b, "badd"); }

Var scale(const Var& a, double k) {
  return unary_pointwise(
      a, "scale", [k](double x) { return x * k; },
      [k](double, double) { return k; });
}

Var add_const(const Var& a, double k) {
  return unary_pointwise(
      a, "add_const", [k](double x) { return x + k; },
      [](double, double) { return 1.0; });
}

Var relu(const Var& a) {
  // 0.0 * x keeps NaN propagating through the clamp
  return unary_pointwise(
      a, "relu", [](double x) { return x > 0 ? x : 0.0 * x; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary_pointwise(
      a, "leaky_relu", [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var sigmoid(const Var& a) {
  return unary_pointwise(
      a, "sigmoid",
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh_act(const Var& a) {
  return unary_pointwise(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var softplus(const Var& a) {
  return unary_pointwise(
      a, "softplus",
      [](double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); },
      [](double x, double) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var abs_val(const Var& a) {
  return unary_pointwise(
      a, "abs", [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var detach(const Var& a) {
  auto n = std::make_shared<Node>();
  n->val = a->val;
  n->op = "detach";
  return n;
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (size_t i = 0; i < a->val.size(); ++i) acc += a->val[i];
  auto n = make_node(Tensor::scalar(acc), {a}, "sum");
  if (n->requires_grad) {
    n->backward_fn = [a](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      const double g = self.grad[0];
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
    };
  }
  return n;
}

Var mean(const Var& a) {
  const double inv = 1.0 / double(a->val.size());
  double acc = 0.0;
  for (size_t i = 0; i < a->val.size(); ++i) acc += a->val[i];
  auto n = make_node(Tensor::scalar(acc * inv), {a}, "mean");
  if (n->requires_grad) {
    n->backward_fn = [a, inv](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      const double g = self.grad[0] * inv;
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
    };
  }
  return n;
}

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat: empty input list");
  const Shape s0 = xs[0]->val.shape;
  int c_total = 0;
  for (const auto& x : xs) {
    const Shape s = x->val.shape;
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
      throw ShapeError("concat: spatial/batch mismatch " + s.str() + " vs " +
                       s0.str());
    c_total += s.c;
  }
  Tensor out(Shape{s0.n, c_total, s0.h, s0.w});
  const size_t plane = size_t(s0.h) * s0.w;
  for (int n = 0; n < s0.n; ++n) {
    int c_off = 0;
    for (const auto& x : xs) {
      const int xc = x->val.shape.c;
      std::copy_n(x->val.data() + size_t(n) * xc * plane, size_t(xc) * plane,
                  out.data() + (size_t(n) * c_total + c_off) * plane);
      c_off += xc;
    }
  }
  auto node = make_node(std::move(out), xs, "concat");
  if (node->requires_grad) {
    node->backward_fn = [xs, s0, c_total, plane](Node& self) {
      for (int n = 0; n < s0.n; ++n) {
        int c_off = 0;
        for (const auto& x : xs) {
          const int xc = x->val.shape.c;
          if (x->requires_grad) {
            x->ensure_grad();
            const double* src = self.grad.data() + (size_t(n) * c_total + c_off) * plane;
            double* dst = x->grad.data() + size_t(n) * xc * plane;
            for (size_t i = 0; i < size_t(xc) * plane; ++i) dst[i] += src[i];
          }
          c_off += xc;
        }
      }
    };
  }
  return node;
}

Var div_scalar(const Var& a, const Var& s) {
  if (s->val.size() != 1) throw ShapeError("div_scalar: divisor must be scalar");
  const double sv = s->val[0];
  Tensor out(a->val.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->val[i] / sv;
  auto n = make_node(std::move(out), {a, s}, "div_scalar");
  if (n->requires_grad) {
    n->backward_fn = [a, s, sv](Node& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          a->grad[i] += self.grad[i] / sv;
      }
      if (s->requires_grad) {
        s->ensure_grad();
        double acc = 0.0;
        for (size_t i = 0; i < self.grad.size(); ++i)
          acc += self.grad[i] * a->val[i];
        s->grad[0] += -acc / (sv * sv);
      }
    };
  }
  return n;
}

Var global_avg_pool(const Var& a) {
  const Shape s = a->val.shape;
  const double inv = 1.0 / (double(s.h) * s.w);
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) acc += a->val.at(n, c, h, w);
      out.at(n, c, 0, 0) = acc * inv;
    }
  auto node = make_node(std::move(out), {a}, "gap");
  if (node->requires_grad) {
    node->backward_fn = [a, s, inv](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          const double g = self.grad.at(n, c, 0, 0) * inv;
          for (int h = 0; h < s.h; ++h)
            for (int w = 0; w < s.w; ++w) a->grad.at(n, c, h, w) += g;
        }
    };
  }
  return node;
}

Var global_max_pool(const Var& a) {
  const Shape s = a->val.shape;
  Tensor out(Shape{s.n, s.c, 1, 1});
  auto argmax = std::make_shared<std::vector<size_t>>(size_t(s.n) * s.c);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      size_t best = a->val.idx(n, c, 0, 0);
      double bv = a->val[best];
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) {
          const size_t i = a->val.idx(n, c, h, w);
          if (a->val[i] > bv) {
            bv = a->val[i];
            best = i;
          }
        }
      out.at(n, c, 0, 0) = bv;
      (*argmax)[size_t(n) * s.c + c] = best;
    }
  auto node = make_node(std::move(out), {a}, "gmp");
  if (node->requires_grad) {
    node->backward_fn = [a, s, argmax](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
          a->grad[(*argmax)[size_t(n) * s.c + c]] += self.grad.at(n, c, 0, 0);
    };
  }
  return node;
}

Var mean_over_channels(const Var& a) {
  const Shape s = a->val.shape;
  const double inv = 1.0 / double(s.c);
  Tensor out(Shape{s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int h = 0; h < s.h; ++h)
      for (int w = 0; w < s.w; ++w) {
        double acc = 0.0;
        for (int c = 0; c < s.c; ++c) acc += a->val.at(n, c, h, w);
        out.at(n, 0, h, w) = acc * inv;
      }
  auto node = make_node(std::move(out), {a}, "cmean");
  if (node->requires_grad) {
    node->backward_fn = [a, s, inv](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      for (int n = 0; n < s.n; ++n)
        for (int h = 0; h < s.h; ++h)
          for (int w = 0; w < s.w; ++w) {
            const double g = self.grad.at(n, 0, h, w) * inv;
            for (int c = 0; c < s.c; ++c) a->grad.at(n, c, h, w) += g;
          }
    };
  }
  return node;
}

Var max_over_channels(const Var& a) {
  const Shape s = a->val.shape;
  Tensor out(Shape{s.n, 1, s.h, s.w});
  auto argmax = std::make_shared<std::vector<int>>(size_t(s.n) * s.h * s.w);
  size_t k = 0;
  for (int n = 0; n < s.n; ++n)
    for (int h = 0; h < s.h; ++h)
      for (int w = 0; w < s.w; ++w, ++k) {
        int bc = 0;
        double bv = a->val.at(n, 0, h, w);
        for (int c = 1; c < s.c; ++c) {
          const double v = a->val.at(n, c, h, w);
          if (v > bv) {
            bv = v;
            bc = c;
          }
        }
        out.at(n, 0, h, w) = bv;
        (*argmax)[k] = bc;
      }
  auto node = make_node(std::move(out), {a}, "cmax");
  if (node->requires_grad) {
    node->backward_fn = [a, s, argmax](Node& self) {
      if (!a->requires_grad) return;
      a->ensure_grad();
      size_t k = 0;
      for (int n = 0; n < s.n; ++n)
        for (int h = 0; h < s.h; ++h)
          for (int w = 0; w < s.w; ++w, ++k)
            a->grad.at(n, (*argmax)[k], h, w) += self.grad.at(n, 0, h, w);
    };
  }
  return node;
}

Var gram(const Var& f) {
  const Shape s = f->val.shape;
  const double inv = 1.0 / (double(s.c) * s.h * s.w);
  const int hw = s.h * s.w;
  Tensor out(Shape{s.n, 1, s.c, s.c});
  for (int n = 0; n < s.n; ++n) {
    const double* base = f->val.data() + size_t(n) * s.c * hw;
    for (int i = 0; i < s.c; ++i)
      for (int j = i; j < s.c; ++j) {
        const double* fi = base + size_t(i) * hw;
        const double* fj = base + size_t(j) * hw;
        double acc = 0.0;
        for (int k = 0; k < hw; ++k) acc += fi[k] * fj[k];
        out.at(n, 0, i, j) = acc * inv;
        out.at(n, 0, j, i) = acc * inv;
      }
  }
  auto node = make_node(std::move(out), {f}, "gram");
  if (node->requires_grad) {
    node->backward_fn = [f, s, inv, hw](Node& self) {
      if (!f->requires_grad) return;
      f->ensure_grad();
      for (int n = 0; n < s.n; ++n) {
        const double* base = f->val.data() + size_t(n) * s.c * hw;
        double* gbase = f->grad.data() + size_t(n) * s.c * hw;
        for (int i = 0; i < s.c; ++i) {
          double* gi = gbase + size_t(i) * hw;
          for (int j = 0; j < s.c; ++j) {
            const double g =
                (self.grad.at(n, 0, i, j) + self.grad.at(n, 0, j, i)) * inv;
            if (g == 0.0) continue;
            const double* fj = base + size_t(j) * hw;
            for (int k = 0; k < hw; ++k) gi[k] += g * fj[k];
          }
        }
      }
    };
  }
  return node;
}

}  // namespace ep::ag
