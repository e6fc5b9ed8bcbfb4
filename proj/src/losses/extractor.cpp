#include "edgepaint/losses/extractor.hpp"

#include <cmath>

#include "edgepaint/core/rng.hpp"
#include "edgepaint/nets/layers.hpp"

namespace ep {

using ag::Var;

std::vector<Var> IdentityExtractor::features(const Var& img) const {
  return {img};
}

TinyConvExtractor::TinyConvExtractor(int in_channels, std::uint64_t seed) {
  Rng rng(seed);
  const double gain = std::sqrt(2.0);
  params_.add("conv1.w",
              normal_init(Shape{8, in_channels, 3, 3}, gain, in_channels * 9, rng),
              false);
  params_.add("conv1.b", Tensor::zeros(Shape{1, 8, 1, 1}), false);
  params_.add("conv2.w", normal_init(Shape{8, 8, 3, 3}, gain, 72, rng), false);
  params_.add("conv2.b", Tensor::zeros(Shape{1, 8, 1, 1}), false);
}

std::vector<Var> TinyConvExtractor::features(const Var& img) const {
  const Var f1 = ag::relu(conv_fwd(params_, "conv1", img, 1, 1));
  const Var f2 = ag::relu(conv_fwd(params_, "conv2", f1, 2, 1));
  return {f1, f2};
}

const std::vector<std::pair<std::string, int>>& Vgg19Extractor::layer_plan() {
  // (conv name, out channels); "P" entries are 2x2 max-pools, "T" marks taps
  static const std::vector<std::pair<std::string, int>> plan = {
      {"conv1_1", 64},  {"conv1_2", 64},  {"T", 0},  {"P", 0},
      {"conv2_1", 128}, {"conv2_2", 128}, {"T", 0},  {"P", 0},
      {"conv3_1", 256}, {"conv3_2", 256}, {"conv3_3", 256}, {"conv3_4", 256},
      {"T", 0},         {"P", 0},
      {"conv4_1", 512}, {"conv4_2", 512}, {"conv4_3", 512}, {"conv4_4", 512},
      {"T", 0},         {"P", 0},
      {"conv5_1", 512}, {"conv5_2", 512}, {"conv5_3", 512}, {"conv5_4", 512},
      {"T", 0}};
  return plan;
}

Vgg19Extractor::Vgg19Extractor(const std::string& weights_path) {
  const Container c = read_container(weights_path);
  int in_ch = 3;
  for (const auto& [name, out_ch] : layer_plan()) {
    if (name == "P" || name == "T") continue;
    bool found_w = false, found_b = false;
    for (const auto& r : c.tensors) {
      if (r.name == name + ".w") {
        if (!(r.shape == Shape{out_ch, in_ch, 3, 3}))
          throw CheckpointError("vgg19 weights: bad shape for " + r.name +
                                ": " + r.shape.str());
        Tensor t(r.shape);
        for (size_t i = 0; i < r.data.size(); ++i) t[i] = double(r.data[i]);
        params_.add(name + ".w", std::move(t), false);
        found_w = true;
      } else if (r.name == name + ".b") {
        Tensor t(Shape{1, out_ch, 1, 1});
        for (size_t i = 0; i < r.data.size() && i < t.size(); ++i)
          t[i] = double(r.data[i]);
        params_.add(name + ".b", std::move(t), false);
        found_b = true;
      }
    }
    if (!found_w || !found_b)
      throw CheckpointError("vgg19 weights file lacks " + name + ": " +
                            weights_path);
    in_ch = out_ch;
  }
}

std::vector<Var> Vgg19Extractor::features(const Var& img) const {
  // signed [-1,1] -> [0,1] -> ImageNet normalization
  const Shape s = img->val.shape;
  if (s.c != 3) throw ShapeError("vgg19 extractor expects rgb input");
  static const double mean[3] = {0.485, 0.456, 0.406};
  static const double stdv[3] = {0.229, 0.224, 0.225};
  Tensor shift(Shape{1, 3, 1, 1}), scale_c(Shape{1, 3, 1, 1});
  for (int c = 0; c < 3; ++c) {
    scale_c.at(0, c, 0, 0) = 0.5 / stdv[c];
    shift.at(0, c, 0, 0) = (0.5 - mean[c]) / stdv[c];
  }
  Var h = ag::badd(ag::bmul(img, ag::constant(std::move(scale_c))),
                   ag::constant(std::move(shift)));

  std::vector<Var> taps;
  for (const auto& [name, out_ch] : layer_plan()) {
    (void)out_ch;
    if (name == "T") {
      taps.push_back(h);
    } else if (name == "P") {
      h = ag::maxpool2d(h, 2, 2);
    } else {
      h = ag::relu(conv_fwd(params_, name, h, 1, 1));
    }
  }
  return taps;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec,
                                                 int in_channels) {
  if (spec == "identity") return std::make_unique<IdentityExtractor>();
  if (spec == "tiny_random" || spec.rfind("tiny_random:", 0) == 0) {
    std::uint64_t seed = 7;
    if (const auto colon = spec.find(':'); colon != std::string::npos)
      seed = std::stoull(spec.substr(colon + 1));
    return std::make_unique<TinyConvExtractor>(in_channels, seed);
  }
  if (spec.rfind("vgg19:", 0) == 0)
    return std::make_unique<Vgg19Extractor>(spec.substr(6));
  throw ConfigError("unknown extractor spec: " + spec);
}

}  // namespace ep
