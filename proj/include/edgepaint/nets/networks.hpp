#pragma once

#include <nlohmann/json.hpp>

#include "edgepaint/nets/layers.hpp"

namespace ep {

enum class OutputHead { Sigmoid, Tanh };

// Encoder (3 stride-2 convs doubling width) -> residual stack -> decoder
// (3 stride-2 transposed convs), with a two-conv skip path into the second
// decoder level and one gated attention layer per decoder level.
struct GeneratorDescriptor {
  int in_channels = 3;
  int out_channels = 1;
  int base_width = 64;
  int res_blocks = 8;
  bool cbam = true;
  int cbam_reduction = 8;
  OutputHead head = OutputHead::Sigmoid;

  nlohmann::json to_json() const;
  static GeneratorDescriptor from_json(const nlohmann::json& j);
  bool operator==(const GeneratorDescriptor&) const = default;
};

// Six convolutions: three stride-2 then three stride-1. The stride-1 tail
// uses valid padding when the bottleneck is large enough (256 -> 28x28 grid),
// same padding otherwise so miniature inputs stay usable.
struct DiscriminatorDescriptor {
  int in_channels = 2;
  int base_width = 64;
  int expected_size = 256;
  bool spectral_norm = true;

  int tail_padding() const { return expected_size / 8 >= 5 ? 0 : 1; }
  int output_size() const {
    const int s8 = expected_size / 8;
    return tail_padding() == 0 ? s8 - 4 : s8;
  }

  nlohmann::json to_json() const;
  static DiscriminatorDescriptor from_json(const nlohmann::json& j);
  bool operator==(const DiscriminatorDescriptor&) const = default;
};

NetworkParams init_generator_params(const GeneratorDescriptor& d,
                                    std::uint64_t seed);
NetworkParams init_discriminator_params(const DiscriminatorDescriptor& d,
                                        std::uint64_t seed);

class Generator {
 public:
  Generator(GeneratorDescriptor d, std::uint64_t seed)
      : desc_(d), params_(init_generator_params(d, seed)) {}

  // Input {N, in_channels, H, W}, H and W divisible by 8. Output has the
  // same spatial size, out_channels planes, and values in the head's range.
  // `shape_log`, when given, records (layer tag, activation shape) pairs.
  ag::Var forward(const ag::Var& x,
                  std::vector<std::pair<std::string, Shape>>* shape_log =
                      nullptr) const;

  const GeneratorDescriptor& desc() const { return desc_; }
  NetworkParams& params() { return params_; }
  const NetworkParams& params() const { return params_; }

 private:
  GeneratorDescriptor desc_;
  NetworkParams params_;
};

struct DiscriminatorOutput {
  ag::Var logits;                // {N,1,G,G}
  std::vector<ag::Var> activations;  // one per convolutional layer
};

class Discriminator {
 public:
  Discriminator(DiscriminatorDescriptor d, std::uint64_t seed)
      : desc_(d), params_(init_discriminator_params(d, seed)) {}

  // Rejects inputs whose spatial size differs from the descriptor's.
  DiscriminatorOutput forward(const ag::Var& x, bool update_sn_state);

  const DiscriminatorDescriptor& desc() const { return desc_; }
  NetworkParams& params() { return params_; }
  const NetworkParams& params() const { return params_; }

 private:
  DiscriminatorDescriptor desc_;
  NetworkParams params_;
};

}  // namespace ep
