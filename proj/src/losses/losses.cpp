#include "edgepaint/losses/losses.hpp"

#include <cmath>

namespace ep {

using ag::Var;

Var adversarial_loss(const Var& real_logits, const Var& fake_logits,
                     GanSide side) {
  if (side == GanSide::Discriminator) {
    if (!real_logits || !fake_logits)
      throw ShapeError("adversarial_loss: discriminator side needs both grids");
    check_same_shape(real_logits->val, fake_logits->val, "adversarial_loss");
    // -E[log σ(real)] - E[log(1-σ(fake))]
    return ag::add(ag::mean(ag::softplus(ag::scale(real_logits, -1.0))),
                   ag::mean(ag::softplus(fake_logits)));
  }
  if (!fake_logits)
    throw ShapeError("adversarial_loss: generator side needs fake grid");
  // -E[log σ(fake)]
  return ag::mean(ag::softplus(ag::scale(fake_logits, -1.0)));
}

Var feature_matching_loss(const std::vector<Var>& real_acts,
                          const std::vector<Var>& fake_acts) {
  if (real_acts.size() != fake_acts.size() || real_acts.empty())
    throw ShapeError("feature_matching_loss: activation lists differ in length");
  Var total;
  for (size_t i = 0; i < real_acts.size(); ++i) {
    check_same_shape(real_acts[i]->val, fake_acts[i]->val,
                     "feature_matching_loss");
    // mean over N,C,H,W == batch average of ‖Δ‖₁ / N_i
    const Var term = ag::mean(ag::abs_val(ag::sub(real_acts[i], fake_acts[i])));
    total = total ? ag::add(total, term) : term;
  }
  return total;
}

Var perceptual_loss(const Var& pred, const Var& gt,
                    const FeatureExtractor& extractor) {
  check_same_shape(pred->val, gt->val, "perceptual_loss");
  const auto fp = extractor.features(pred);
  const auto fg = extractor.features(gt);
  Var total;
  for (size_t i = 0; i < fp.size(); ++i) {
    const Var term = ag::mean(ag::abs_val(ag::sub(fg[i], fp[i])));
    total = total ? ag::add(total, term) : term;
  }
  return total;
}

Var style_loss(const Var& pred, const Var& gt,
               const FeatureExtractor& extractor) {
  check_same_shape(pred->val, gt->val, "style_loss");
  const auto fp = extractor.features(pred);
  const auto fg = extractor.features(gt);
  Var total;
  for (size_t i = 0; i < fp.size(); ++i) {
    const int batch = fp[i]->val.shape.n;
    // per-sample ‖G(pred) - G(gt)‖₁, averaged over the batch
    const Var term = ag::scale(
        ag::sum(ag::abs_val(ag::sub(ag::gram(fp[i]), ag::gram(fg[i])))),
        1.0 / double(batch));
    total = total ? ag::add(total, term) : term;
  }
  return ag::scale(total, 1.0 / double(fp.size()));
}

Tensor gram_matrix(const Tensor& f) {
  return ag::gram(ag::constant(f))->val;
}

Var l1_masked(const Var& pred, const Var& gt, const Tensor& mask) {
  check_same_shape(pred->val, gt->val, "l1_masked");
  const Shape s = pred->val.shape;
  if (mask.shape.h != s.h || mask.shape.w != s.w || mask.shape.c != 1)
    throw ShapeError("l1_masked: mask must be {N,1,H,W} matching the images");
  double count = 0.0;
  for (double m : mask.v) count += m;
  if (mask.shape.n == 1 && s.n > 1) count *= s.n;
  if (count <= 0.0)
    throw DataError("l1_masked: all-zero mask; normalization undefined");
  return ag::scale(ag::sum(ag::abs_val(ag::sub(pred, gt))),
                   1.0 / (count * double(s.c)));
}

LossBundle total_loss(double adv, double l1, double perc, double style,
                      double fm, double lambda_l1, double lambda_perc,
                      double lambda_style, double lambda_fm) {
  for (double v : {adv, l1, perc, style, fm})
    if (!std::isfinite(v))
      throw NumericError("total_loss: non-finite component");
  LossBundle b;
  b.adv = adv;
  b.l1 = l1;
  b.perc = perc;
  b.style = style;
  b.fm = fm;
  b.lambda_l1 = lambda_l1;
  b.lambda_perc = lambda_perc;
  b.lambda_style = lambda_style;
  b.lambda_fm = lambda_fm;
  b.total = adv + lambda_l1 * l1 + lambda_perc * perc + lambda_style * style +
            lambda_fm * fm;
  if (!std::isfinite(b.total)) throw NumericError("total_loss: non-finite total");
  return b;
}

}  // namespace ep
