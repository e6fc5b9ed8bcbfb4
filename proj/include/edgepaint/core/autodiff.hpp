#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "edgepaint/core/tensor.hpp"

namespace ep::ag {

struct Node;
using Var = std::shared_ptr<Node>;

// One vertex of a define-by-run graph. Ops compute `val` eagerly and attach
// a closure that scatters `grad` into the inputs.
struct Node {
  Tensor val;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward_fn;
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros(val.shape);
  }
  void zero_grad() {
    if (!grad.empty()) grad.fill(0.0);
  }
};

Var constant(Tensor t);
Var leaf(Tensor t);  // trainable leaf: requires_grad = true

// Reverse-mode sweep from a scalar root. Accumulates into leaf grads.
void backward(const Var& root);

// ---- elementwise & broadcast ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// b's dims must each equal a's or be 1; broadcast over the 1-dims.
Var bmul(const Var& a, const Var& b);
Var badd(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var add_const(const Var& a, double k);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var sigmoid(const Var& a);
Var tanh_act(const Var& a);
Var softplus(const Var& a);
Var abs_val(const Var& a);
Var detach(const Var& a);

// ---- reductions & structure ----
Var sum(const Var& a);   // -> {1,1,1,1}
Var mean(const Var& a);  // -> {1,1,1,1}
Var concat_channels(const std::vector<Var>& xs);
// a / s where s is a scalar var; gradient flows into both.
Var div_scalar(const Var& a, const Var& s);
Var global_avg_pool(const Var& a);  // -> {N,C,1,1}
Var global_max_pool(const Var& a);  // -> {N,C,1,1}
Var mean_over_channels(const Var& a);  // -> {N,1,H,W}
Var max_over_channels(const Var& a);   // -> {N,1,H,W}
// Per-sample gram matrix scaled by 1/(C*H*W): {N,C,H,W} -> {N,1,C,C}.
Var gram(const Var& f);

// ---- spatial ops (conv_ops.cpp) ----
// w: {OC,IC,KH,KW}; b: {1,OC,1,1} or nullptr.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
           int dilation = 1);
// w: {IC,OC,KH,KW}; out = (in-1)*stride - 2*pad + k.
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad);
Var maxpool2d(const Var& x, int k, int stride);
Var resize_bilinear(const Var& x, int out_h, int out_w);
Var instance_norm(const Var& x, const Var& gamma, const Var& beta,
                  double eps = 1e-5);

}  // namespace ep::ag
