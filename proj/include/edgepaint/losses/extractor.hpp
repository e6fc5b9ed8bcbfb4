#pragma once

#include <memory>
#include <string>
#include <vector>

#include "edgepaint/nets/params.hpp"

namespace ep {

// Produces activation maps for perceptual/style losses. Weights are frozen;
// gradients flow through the ops back to the input image.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  // img: {N,C,H,W} in signed [-1,1] range.
  virtual std::vector<ag::Var> features(const ag::Var& img) const = 0;
  virtual std::string id() const = 0;
};

// features = {input}. Turns the perceptual loss into a plain L1 distance.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::vector<ag::Var> features(const ag::Var& img) const override;
  std::string id() const override { return "identity"; }
};

// Two fixed random convolutions; self-contained stand-in for CI and smoke
// runs where no pretrained weights are available.
class TinyConvExtractor final : public FeatureExtractor {
 public:
  explicit TinyConvExtractor(int in_channels = 3, std::uint64_t seed = 7);
  std::vector<ag::Var> features(const ag::Var& img) const override;
  std::string id() const override { return "tiny_random"; }

 private:
  NetworkParams params_;
};

// VGG-19 feature stack loaded from a checkpoint container holding tensors
// conv1_1.w/.b .. conv5_4.w/.b. Taps the activation closing each conv stage.
class Vgg19Extractor final : public FeatureExtractor {
 public:
  explicit Vgg19Extractor(const std::string& weights_path);
  std::vector<ag::Var> features(const ag::Var& img) const override;
  std::string id() const override { return "vgg19"; }

  static const std::vector<std::pair<std::string, int>>& layer_plan();

 private:
  NetworkParams params_;
};

// "identity" | "tiny_random" | "vgg19:<weights-path>"
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec,
                                                 int in_channels = 3);

}  // namespace ep
