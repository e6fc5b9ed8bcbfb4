#pragma once

#include "edgepaint/losses/extractor.hpp"

namespace ep {

enum class GanSide { Generator, Discriminator };

// Non-saturating GAN loss on logit grids, mean over grid and batch.
// Discriminator: E[softplus(-real)] + E[softplus(fake)]
// Generator:     E[softplus(-fake)]   (real_logits may be null)
ag::Var adversarial_loss(const ag::Var& real_logits, const ag::Var& fake_logits,
                         GanSide side);

// Sum over layers of the per-element L1 gap, each layer normalized by its
// element count and averaged over the batch.
ag::Var feature_matching_loss(const std::vector<ag::Var>& real_acts,
                              const std::vector<ag::Var>& fake_acts);

ag::Var perceptual_loss(const ag::Var& pred, const ag::Var& gt,
                        const FeatureExtractor& extractor);

// Mean over layers of the per-sample L1 gap between gram matrices.
ag::Var style_loss(const ag::Var& pred, const ag::Var& gt,
                   const FeatureExtractor& extractor);

// Value-level gram matrix of a single feature map, scaled by 1/(C*H*W).
Tensor gram_matrix(const Tensor& f);

// ‖pred - gt‖₁ / (masked pixel count · channels). mask: {N or 1, 1, H, W}.
ag::Var l1_masked(const ag::Var& pred, const ag::Var& gt, const Tensor& mask);

// Named scalar components with their weights and the combined total.
struct LossBundle {
  double adv = 0.0;
  double l1 = 0.0;
  double perc = 0.0;
  double style = 0.0;
  double fm = 0.0;
  double lambda_l1 = 1.0;
  double lambda_perc = 1.0;
  double lambda_style = 1.0;
  double lambda_fm = 1.0;
  double total = 0.0;
};

// total = adv + λ1·l1 + λ2·perc + λ3·style (+ λ_fm·fm on the edge stage).
// Throws NumericError on non-finite components.
LossBundle total_loss(double adv, double l1, double perc, double style,
                      double fm, double lambda_l1 = 1.0,
                      double lambda_perc = 1.0, double lambda_style = 1.0,
                      double lambda_fm = 1.0);

}  // namespace ep
