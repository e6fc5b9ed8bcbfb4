#pragma once

#include "edgepaint/core/rng.hpp"
#include "edgepaint/nets/params.hpp"

namespace ep {

// Scaled-normal weight init: std = gain / sqrt(fan_in), zero biases.
Tensor normal_init(Shape s, double gain, int fan_in, Rng& rng);

// ---- registration ----
void register_conv(NetworkParams& p, Rng& rng, const std::string& name,
                   int in_ch, int out_ch, int k, double gain, bool bias = true);
void register_conv_transpose(NetworkParams& p, Rng& rng, const std::string& name,
                             int in_ch, int out_ch, int k, double gain,
                             bool bias = true);
void register_instance_norm(NetworkParams& p, const std::string& name, int ch);
// Power-iteration state for spectral normalization of `name`'s weight.
void register_spectral_state(NetworkParams& p, Rng& rng, const std::string& name,
                             int rows);
void register_residual_block(NetworkParams& p, Rng& rng,
                             const std::string& prefix, int ch);
void register_gated_attention(NetworkParams& p, Rng& rng,
                              const std::string& prefix, int gate_ch,
                              int skip_ch, int inter_ch);
void register_cbam(NetworkParams& p, Rng& rng, const std::string& prefix,
                   int ch, int reduction);

// ---- forward ----
ag::Var conv_fwd(const NetworkParams& p, const std::string& name,
                 const ag::Var& x, int stride, int pad, int dilation = 1);
ag::Var conv_transpose_fwd(const NetworkParams& p, const std::string& name,
                           const ag::Var& x, int stride, int pad);
// Spectrally normalized conv: one power iteration refreshes the stored u
// vector when `update_state` is set, then the weight is scaled by 1/sigma
// inside the graph so the generator still receives gradients through it.
ag::Var conv_sn_fwd(NetworkParams& p, const std::string& name, const ag::Var& x,
                    int stride, int pad, bool update_state);
ag::Var instance_norm_fwd(const NetworkParams& p, const std::string& name,
                          const ag::Var& x);

// x + F(x), F = conv(3x3, dilation 2) -> IN -> relu -> conv -> IN.
ag::Var residual_block(const NetworkParams& p, const std::string& prefix,
                       const ag::Var& x);

// skip ⊙ sigmoid(psi(relu(Wg·gate + Wx·skip))); the gate is bilinearly
// resampled to the skip's resolution first.
ag::Var gated_attention(const NetworkParams& p, const std::string& prefix,
                        const ag::Var& gate, const ag::Var& skip);

// Channel attention (shared MLP over avg+max pooled descriptors) followed by
// spatial attention (7x7 conv over channel-pooled maps).
ag::Var cbam(const NetworkParams& p, const std::string& prefix,
             const ag::Var& x);

}  // namespace ep
