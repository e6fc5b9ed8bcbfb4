#include "edgepaint/nets/layers.hpp"

#include <algorithm>
#include <cmath>

namespace ep {

using ag::Var;

Tensor normal_init(Shape s, double gain, int fan_in, Rng& rng) {
  Tensor t(s);
  const double std = gain / std::sqrt(double(fan_in));
  for (auto& v : t.v) v = rng.normal() * std;
  return t;
}

void register_conv(NetworkParams& p, Rng& rng, const std::string& name,
                   int in_ch, int out_ch, int k, double gain, bool bias) {
  const int fan_in = in_ch * k * k;
  p.add(name + ".w", normal_init(Shape{out_ch, in_ch, k, k}, gain, fan_in, rng),
        true, "normal gain=" + std::to_string(gain));
  if (bias) p.add(name + ".b", Tensor::zeros(Shape{1, out_ch, 1, 1}), true, "zeros");
}

void register_conv_transpose(NetworkParams& p, Rng& rng, const std::string& name,
                             int in_ch, int out_ch, int k, double gain,
                             bool bias) {
  const int fan_in = in_ch * k * k;
  p.add(name + ".w", normal_init(Shape{in_ch, out_ch, k, k}, gain, fan_in, rng),
        true, "normal gain=" + std::to_string(gain));
  if (bias) p.add(name + ".b", Tensor::zeros(Shape{1, out_ch, 1, 1}), true, "zeros");
}

void register_instance_norm(NetworkParams& p, const std::string& name, int ch) {
  p.add(name + ".gamma", Tensor::full(Shape{1, ch, 1, 1}, 1.0), true, "ones");
  p.add(name + ".beta", Tensor::zeros(Shape{1, ch, 1, 1}), true, "zeros");
}

void register_spectral_state(NetworkParams& p, Rng& rng, const std::string& name,
                             int rows) {
  Tensor u(Shape{1, 1, 1, rows});
  double norm = 0.0;
  for (auto& v : u.v) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm) + 1e-12;
  for (auto& v : u.v) v /= norm;
  p.add(name + ".sn_u", std::move(u), false, "power-iteration state");
}

ag::Var conv_fwd(const NetworkParams& p, const std::string& name,
                 const ag::Var& x, int stride, int pad, int dilation) {
  const Var& w = p.get(name + ".w");
  const Var b = p.has(name + ".b") ? p.get(name + ".b") : nullptr;
  return ag::conv2d(x, w, b, stride, pad, dilation);
}

ag::Var conv_transpose_fwd(const NetworkParams& p, const std::string& name,
                           const ag::Var& x, int stride, int pad) {
  const Var& w = p.get(name + ".w");
  const Var b = p.has(name + ".b") ? p.get(name + ".b") : nullptr;
  return ag::conv_transpose2d(x, w, b, stride, pad);
}

ag::Var conv_sn_fwd(NetworkParams& p, const std::string& name, const ag::Var& x,
                    int stride, int pad, bool update_state) {
  const Var& w = p.get(name + ".w");
  auto& u_entry = p.entry(name + ".sn_u");
  Tensor& u = u_entry.var->val;
  const Shape ws = w->val.shape;
  const int rows = ws.n;
  const int cols = ws.c * ws.h * ws.w;
  const double* wd = w->val.data();

  // v = normalize(W^T u); optionally u <- normalize(W v)
  std::vector<double> v(size_t(cols), 0.0);
  for (int r = 0; r < rows; ++r) {
    const double ur = u[size_t(r)];
    const double* wr = wd + size_t(r) * cols;
    for (int c = 0; c < cols; ++c) v[size_t(c)] += ur * wr[c];
  }
  double vn = 0.0;
  for (double x2 : v) vn += x2 * x2;
  vn = std::sqrt(vn) + 1e-12;
  for (double& x2 : v) x2 /= vn;

  std::vector<double> u_new(size_t(rows), 0.0);
  for (int r = 0; r < rows; ++r) {
    const double* wr = wd + size_t(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wr[c] * v[size_t(c)];
    u_new[size_t(r)] = acc;
  }
  double un = 0.0;
  for (double x2 : u_new) un += x2 * x2;
  un = std::sqrt(un) + 1e-12;
  for (double& x2 : u_new) x2 /= un;
  if (update_state)
    for (int r = 0; r < rows; ++r) u[size_t(r)] = u_new[size_t(r)];

  // sigma = u^T W v = sum(W ⊙ u v^T); differentiable in W with u,v fixed.
  Tensor uv(ws);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      uv[size_t(r) * cols + c] = u_new[size_t(r)] * v[size_t(c)];
  const Var sigma = ag::sum(ag::mul(w, ag::constant(std::move(uv))));
  const Var w_sn = ag::div_scalar(w, sigma);

  const Var b = p.has(name + ".b") ? p.get(name + ".b") : nullptr;
  return ag::conv2d(x, w_sn, b, stride, pad, 1);
}

ag::Var instance_norm_fwd(const NetworkParams& p, const std::string& name,
                          const ag::Var& x) {
  return ag::instance_norm(x, p.get(name + ".gamma"), p.get(name + ".beta"));
}

void register_residual_block(NetworkParams& p, Rng& rng,
                             const std::string& prefix, int ch) {
  register_conv(p, rng, prefix + ".conv1", ch, ch, 3, std::sqrt(2.0));
  register_instance_norm(p, prefix + ".norm1", ch);
  register_conv(p, rng, prefix + ".conv2", ch, ch, 3, std::sqrt(2.0));
  register_instance_norm(p, prefix + ".norm2", ch);
}

ag::Var residual_block(const NetworkParams& p, const std::string& prefix,
                       const ag::Var& x) {
  Var f = conv_fwd(p, prefix + ".conv1", x, 1, 2, 2);
  f = instance_norm_fwd(p, prefix + ".norm1", f);
  f = ag::relu(f);
  f = conv_fwd(p, prefix + ".conv2", f, 1, 2, 2);
  f = instance_norm_fwd(p, prefix + ".norm2", f);
  return ag::add(x, f);
}

void register_gated_attention(NetworkParams& p, Rng& rng,
                              const std::string& prefix, int gate_ch,
                              int skip_ch, int inter_ch) {
  register_conv(p, rng, prefix + ".wg", gate_ch, inter_ch, 1, 1.0);
  register_conv(p, rng, prefix + ".wx", skip_ch, inter_ch, 1, 1.0);
  register_conv(p, rng, prefix + ".psi", inter_ch, 1, 1, 1.0);
}

ag::Var gated_attention(const NetworkParams& p, const std::string& prefix,
                        const ag::Var& gate, const ag::Var& skip) {
  const Shape ss = skip->val.shape;
  Var g = gate;
  if (gate->val.shape.h != ss.h || gate->val.shape.w != ss.w)
    g = ag::resize_bilinear(gate, ss.h, ss.w);
  const Var q = ag::relu(ag::add(conv_fwd(p, prefix + ".wg", g, 1, 0),
                                 conv_fwd(p, prefix + ".wx", skip, 1, 0)));
  const Var alpha = ag::sigmoid(conv_fwd(p, prefix + ".psi", q, 1, 0));
  return ag::bmul(skip, alpha);
}

void register_cbam(NetworkParams& p, Rng& rng, const std::string& prefix,
                   int ch, int reduction) {
  if (reduction < 1 || ch % reduction != 0)
    throw ConfigError("cbam: channels " + std::to_string(ch) +
                      " not divisible by reduction " + std::to_string(reduction));
  register_conv(p, rng, prefix + ".fc1", ch, ch / reduction, 1, std::sqrt(2.0));
  register_conv(p, rng, prefix + ".fc2", ch / reduction, ch, 1, 1.0);
  register_conv(p, rng, prefix + ".spatial", 2, 1, 7, 1.0);
}

ag::Var cbam(const NetworkParams& p, const std::string& prefix,
             const ag::Var& x) {
  auto mlp = [&](const Var& s) {
    return conv_fwd(p, prefix + ".fc2", ag::relu(conv_fwd(p, prefix + ".fc1", s, 1, 0)), 1, 0);
  };
  const Var ch_att = ag::sigmoid(
      ag::add(mlp(ag::global_avg_pool(x)), mlp(ag::global_max_pool(x))));
  const Var xc = ag::bmul(x, ch_att);

  const Var pooled = ag::concat_channels(
      {ag::mean_over_channels(xc), ag::max_over_channels(xc)});
  const Var sp_att =
      ag::sigmoid(conv_fwd(p, prefix + ".spatial", pooled, 1, 3));
  return ag::bmul(xc, sp_att);
}

}  // namespace ep
