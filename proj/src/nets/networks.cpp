#include "edgepaint/nets/networks.hpp"

#include <algorithm>
#include <cmath>

namespace ep {

using ag::Var;

nlohmann::json GeneratorDescriptor::to_json() const {
  return {{"in_channels", in_channels},
          {"out_channels", out_channels},
          {"base_width", base_width},
          {"res_blocks", res_blocks},
          {"cbam", cbam},
          {"cbam_reduction", cbam_reduction},
          {"head", head == OutputHead::Sigmoid ? "sigmoid" : "tanh"}};
}

GeneratorDescriptor GeneratorDescriptor::from_json(const nlohmann::json& j) {
  GeneratorDescriptor d;
  d.in_channels = j.at("in_channels");
  d.out_channels = j.at("out_channels");
  d.base_width = j.at("base_width");
  d.res_blocks = j.at("res_blocks");
  d.cbam = j.at("cbam");
  d.cbam_reduction = j.at("cbam_reduction");
  d.head = j.at("head") == "sigmoid" ? OutputHead::Sigmoid : OutputHead::Tanh;
  return d;
}

nlohmann::json DiscriminatorDescriptor::to_json() const {
  return {{"in_channels", in_channels},
          {"base_width", base_width},
          {"expected_size", expected_size},
          {"spectral_norm", spectral_norm}};
}

DiscriminatorDescriptor DiscriminatorDescriptor::from_json(
    const nlohmann::json& j) {
  DiscriminatorDescriptor d;
  d.in_channels = j.at("in_channels");
  d.base_width = j.at("base_width");
  d.expected_size = j.at("expected_size");
  d.spectral_norm = j.at("spectral_norm");
  return d;
}

namespace {

// CBAM slots inside the residual stack: mid-stack and end.
std::vector<int> cbam_positions(int res_blocks) {
  std::vector<int> pos;
  const int mid = (res_blocks + 1) / 2;
  pos.push_back(mid);
  if (res_blocks != mid) pos.push_back(res_blocks);
  return pos;
}

}  // namespace

NetworkParams init_generator_params(const GeneratorDescriptor& d,
                                    std::uint64_t seed) {
  NetworkParams p;
  Rng rng(seed);
  const int w = d.base_width;
  const double g = std::sqrt(2.0);

  register_conv(p, rng, "enc1", d.in_channels, w, 7, g);
  register_instance_norm(p, "enc1.norm", w);
  register_conv(p, rng, "enc2", w, 2 * w, 4, g);
  register_instance_norm(p, "enc2.norm", 2 * w);
  register_conv(p, rng, "enc3", 2 * w, 4 * w, 4, g);
  register_instance_norm(p, "enc3.norm", 4 * w);

  for (int i = 1; i <= d.res_blocks; ++i)
    register_residual_block(p, rng, "res" + std::to_string(i), 4 * w);
  if (d.cbam)
    for (int i : cbam_positions(d.res_blocks))
      register_cbam(p, rng, "cbam" + std::to_string(i), 4 * w, d.cbam_reduction);

  register_gated_attention(p, rng, "att3", 4 * w, 4 * w, 2 * w);
  register_conv_transpose(p, rng, "dec1", 4 * w, 2 * w, 4, g);
  register_instance_norm(p, "dec1.norm", 2 * w);

  register_conv(p, rng, "skip1", 2 * w, 2 * w, 3, g);
  register_conv(p, rng, "skip2", 2 * w, 2 * w, 3, 1.0);

  register_gated_attention(p, rng, "att2", 2 * w, 2 * w, w);
  register_conv_transpose(p, rng, "dec2", 2 * w, w, 4, g);
  register_instance_norm(p, "dec2.norm", w);

  register_gated_attention(p, rng, "att1", w, w, std::max(w / 2, 1));
  register_conv_transpose(p, rng, "dec3", w, d.out_channels, 4, 1.0);
  return p;
}

ag::Var Generator::forward(
    const ag::Var& x, std::vector<std::pair<std::string, Shape>>* shape_log) const {
  const Shape s = x->val.shape;
  if (s.c != desc_.in_channels)
    throw ShapeError("generator expects " + std::to_string(desc_.in_channels) +
                     " input channels, got " + std::to_string(s.c));
  if (s.h % 8 != 0 || s.w % 8 != 0)
    throw ShapeError("generator input dims must divide by 8, got " + s.str());

  auto log = [&](const char* tag, const Var& v) {
    if (shape_log) shape_log->push_back({tag, v->val.shape});
    return v;
  };

  const NetworkParams& p = params_;
  const Var e1 = log("enc1", ag::relu(instance_norm_fwd(p, "enc1.norm", conv_fwd(p, "enc1", x, 2, 3))));
  const Var e2 = log("enc2", ag::relu(instance_norm_fwd(p, "enc2.norm", conv_fwd(p, "enc2", e1, 2, 1))));
  const Var e3 = log("enc3", ag::relu(instance_norm_fwd(p, "enc3.norm", conv_fwd(p, "enc3", e2, 2, 1))));

  Var r = e3;
  const auto cbam_at = cbam_positions(desc_.res_blocks);
  for (int i = 1; i <= desc_.res_blocks; ++i) {
    r = log(("res" + std::to_string(i)).c_str(),
            residual_block(p, "res" + std::to_string(i), r));
    if (desc_.cbam &&
        std::find(cbam_at.begin(), cbam_at.end(), i) != cbam_at.end())
      r = cbam(p, "cbam" + std::to_string(i), r);
  }
  log("bottleneck", r);

  const Var a3 = gated_attention(p, "att3", e3, r);
  Var d1 = ag::relu(instance_norm_fwd(p, "dec1.norm", conv_transpose_fwd(p, "dec1", a3, 2, 1)));
  const Var skip = conv_fwd(p, "skip2", ag::relu(conv_fwd(p, "skip1", e2, 1, 1)), 1, 1);
  d1 = log("dec1", ag::add(d1, skip));

  const Var a2 = gated_attention(p, "att2", e2, d1);
  const Var d2 = log("dec2", ag::relu(instance_norm_fwd(p, "dec2.norm", conv_transpose_fwd(p, "dec2", a2, 2, 1))));

  const Var a1 = gated_attention(p, "att1", e1, d2);
  const Var out = conv_transpose_fwd(p, "dec3", a1, 2, 1);
  return log("head", desc_.head == OutputHead::Sigmoid ? ag::sigmoid(out)
                                                       : ag::tanh_act(out));
}

NetworkParams init_discriminator_params(const DiscriminatorDescriptor& d,
                                        std::uint64_t seed) {
  NetworkParams p;
  Rng rng(seed);
  const int w = d.base_width;
  const double g = std::sqrt(2.0);
  const int widths[6][2] = {{d.in_channels, w}, {w, 2 * w},     {2 * w, 4 * w},
                            {4 * w, 4 * w},     {4 * w, 4 * w}, {4 * w, 1}};
  const int kernels[6] = {4, 4, 4, 3, 3, 3};
  for (int i = 0; i < 6; ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    register_conv(p, rng, name, widths[i][0], widths[i][1], kernels[i],
                  i == 5 ? 1.0 : g);
    if (d.spectral_norm) register_spectral_state(p, rng, name, widths[i][1]);
  }
  return p;
}

DiscriminatorOutput Discriminator::forward(const ag::Var& x,
                                           bool update_sn_state) {
  const Shape s = x->val.shape;
  if (s.c != desc_.in_channels)
    throw ShapeError("discriminator expects " +
                     std::to_string(desc_.in_channels) + " input channels, got " +
                     std::to_string(s.c));
  if (s.h != desc_.expected_size || s.w != desc_.expected_size)
    throw ShapeError("discriminator expects " +
                     std::to_string(desc_.expected_size) + "x" +
                     std::to_string(desc_.expected_size) + " inputs, got " +
                     s.str());

  const int tail_pad = desc_.tail_padding();
  const int strides[6] = {2, 2, 2, 1, 1, 1};
  const int pads[6] = {1, 1, 1, tail_pad, tail_pad, 1};

  DiscriminatorOutput out;
  Var h = x;
  for (int i = 0; i < 6; ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    h = desc_.spectral_norm
            ? conv_sn_fwd(params_, name, h, strides[i], pads[i], update_sn_state)
            : conv_fwd(params_, name, h, strides[i], pads[i]);
    if (i < 5) h = ag::leaky_relu(h, 0.2);
    out.activations.push_back(h);
  }
  out.logits = h;
  return out;
}

}  // namespace ep
