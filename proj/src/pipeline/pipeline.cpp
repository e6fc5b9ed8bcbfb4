#include "edgepaint/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;

namespace ep {

using ag::Var;

GeneratorDescriptor ModelConfig::g1_desc() const {
  return {3, 1, gen_width, res_blocks, cbam, cbam_reduction, OutputHead::Sigmoid};
}
GeneratorDescriptor ModelConfig::g2_desc() const {
  return {4, 3, gen_width, res_blocks, cbam, cbam_reduction, OutputHead::Tanh};
}
GeneratorDescriptor ModelConfig::g3_desc() const {
  return {6, 3, gen_width, res_blocks, cbam, cbam_reduction, OutputHead::Tanh};
}
DiscriminatorDescriptor ModelConfig::d1_desc() const {
  return {2, disc_width, image_size, true};
}
DiscriminatorDescriptor ModelConfig::d2_desc() const {
  return {4, disc_width, image_size, true};
}
DiscriminatorDescriptor ModelConfig::d3_desc() const {
  return {6, disc_width, image_size, true};
}

nlohmann::json ModelConfig::to_json() const {
  return {{"image_size", image_size},
          {"gen_width", gen_width},
          {"disc_width", disc_width},
          {"res_blocks", res_blocks},
          {"cbam", cbam},
          {"cbam_reduction", cbam_reduction},
          {"canny_sigma", canny.sigma},
          {"canny_low", canny.low},
          {"canny_high", canny.high},
          {"lambda_l1", lambda_l1},
          {"lambda_perc", lambda_perc},
          {"lambda_style", lambda_style},
          {"lambda_fm", lambda_fm},
          {"extractor", extractor}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.image_size = j.at("image_size");
  c.gen_width = j.at("gen_width");
  c.disc_width = j.at("disc_width");
  c.res_blocks = j.at("res_blocks");
  c.cbam = j.at("cbam");
  c.cbam_reduction = j.at("cbam_reduction");
  c.canny.sigma = j.at("canny_sigma");
  c.canny.low = j.at("canny_low");
  c.canny.high = j.at("canny_high");
  c.lambda_l1 = j.at("lambda_l1");
  c.lambda_perc = j.at("lambda_perc");
  c.lambda_style = j.at("lambda_style");
  c.lambda_fm = j.at("lambda_fm");
  c.extractor = j.at("extractor");
  return c;
}

std::string ModelConfig::hash_hex() const {
  const std::uint64_t h = fnv1a64(to_json().dump());
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Edge: return "edge";
    case Stage::Colour: return "colour";
    case Stage::Global: return "global";
  }
  return "?";
}

InpaintModel::InpaintModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      g1_(cfg.g1_desc(), Rng::derive_seed(seed, "g1")),
      g2_(cfg.g2_desc(), Rng::derive_seed(seed, "g2")),
      g3_(cfg.g3_desc(), Rng::derive_seed(seed, "g3")),
      d1_(cfg.d1_desc(), Rng::derive_seed(seed, "d1")),
      d2_(cfg.d2_desc(), Rng::derive_seed(seed, "d2")),
      d3_(cfg.d3_desc(), Rng::derive_seed(seed, "d3")) {}

void InpaintModel::save(const std::string& path) const {
  Container c;
  c.meta = {{"format", 1},
            {"model_config", cfg_.to_json()},
            {"config_hash", cfg_.hash_hex()}};
  append_records(g1_.params(), "g1/", c.tensors);
  append_records(g2_.params(), "g2/", c.tensors);
  append_records(g3_.params(), "g3/", c.tensors);
  append_records(d1_.params(), "d1/", c.tensors);
  append_records(d2_.params(), "d2/", c.tensors);
  append_records(d3_.params(), "d3/", c.tensors);
  write_container(c, path);
}

InpaintModel InpaintModel::load(const std::string& path) {
  const Container c = read_container(path);
  if (!c.meta.contains("model_config"))
    throw CheckpointError("checkpoint lacks model config: " + path);
  const ModelConfig cfg = ModelConfig::from_json(c.meta.at("model_config"));
  const std::string stored = c.meta.value("config_hash", "");
  if (stored != cfg.hash_hex())
    throw CheckpointError("checkpoint config hash mismatch: " + path);
  InpaintModel m(cfg, 0);
  load_records(m.g1_.params(), "g1/", c.tensors);
  load_records(m.g2_.params(), "g2/", c.tensors);
  load_records(m.g3_.params(), "g3/", c.tensors);
  load_records(m.d1_.params(), "d1/", c.tensors);
  load_records(m.d2_.params(), "d2/", c.tensors);
  load_records(m.d3_.params(), "d3/", c.tensors);
  return m;
}

void TrainConfig::validate() const {
  if (lr_g < 0 || lr_d < 0) throw ConfigError("learning rates must be >= 0");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ConfigError("adam betas must lie in [0,1)");
  if (adam_eps <= 0) throw ConfigError("adam eps must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps_per_stage < 0) throw ConfigError("steps_per_stage must be >= 0");
  if (jigsaw_grid < 1) throw ConfigError("jigsaw_grid must be >= 1");
  mask_spec.validate();
}

void write_metrics_csv(const MetricsLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics: " + path);
  out << "step,stage,adv,l1,perc,style,fm,total\n";
  out << std::setprecision(17);
  for (const auto& r : log)
    out << r.step << ',' << r.stage << ',' << r.bundle.adv << ',' << r.bundle.l1
        << ',' << r.bundle.perc << ',' << r.bundle.style << ',' << r.bundle.fm
        << ',' << r.bundle.total << '\n';
}

ExampleSource::ExampleSource(std::vector<std::string> paths, MaskSpec mask_spec,
                             CannyConfig canny, std::uint64_t mask_seed,
                             bool fixed_masks)
    : paths_(std::move(paths)), mask_spec_(mask_spec), canny_(canny),
      mask_seed_(mask_seed), fixed_masks_(fixed_masks) {
  if (paths_.empty()) throw DataError("ExampleSource: no items");
}

const ExampleSource::BaseExample& ExampleSource::base(
    const std::string& path) const {
  auto it = cache_.find(path);
  if (it != cache_.end()) return it->second;
  if (cache_.size() > 256) cache_.clear();  // bound the footprint
  Image img = load_image(path, Range::Unit);
  if (img.kind() == ImageKind::Gray) {
    Image rgb(img.height(), img.width(), ImageKind::Rgb, Range::Unit);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rgb.at(c, y, x) = img.at(0, y, x);
    img = std::move(rgb);
  }
  BaseExample b;
  b.id = fs::path(path).stem().string();
  b.i_gray = to_grayscale(img);
  b.c_gt = canny_edges(b.i_gray, canny_);
  b.i_gt = std::move(img);
  return cache_.emplace(path, std::move(b)).first->second;
}

TrainingExample ExampleSource::get(const std::string& path, int epoch) const {
  const BaseExample& b = base(path);
  TrainingExample ex;
  ex.id = b.id;
  ex.i_gt = b.i_gt;
  ex.i_gray = b.i_gray;
  ex.c_gt = b.c_gt;
  Rng rng = fixed_masks_
                ? rng_for_item(mask_seed_, b.id)
                : rng_for_item(mask_seed_, b.id + "#" + std::to_string(epoch));
  ex.mask = generate_mask(ex.i_gt.height(), ex.i_gt.width(), mask_spec_, rng);
  return ex;
}

namespace {

// Stacked per-batch tensors shared by all three stages.
struct BatchTensors {
  int n = 0, h = 0, w = 0;
  Tensor gray_signed, gray_masked, c_gt, c_gt_masked, mask;
  Tensor i_gt_signed, i_gt_masked;
  std::vector<std::string> ids;
  std::vector<TrainingExample> examples;
};

Tensor stack_images(const std::vector<Image>& imgs) {
  Tensor t(Shape{int(imgs.size()), imgs[0].channels(), imgs[0].height(),
                 imgs[0].width()});
  for (size_t i = 0; i < imgs.size(); ++i) stack_into_batch(t, int(i), imgs[i]);
  return t;
}

BatchTensors assemble_batch(const std::vector<TrainingExample>& exs) {
  BatchTensors b;
  b.n = int(exs.size());
  b.h = exs[0].i_gt.height();
  b.w = exs[0].i_gt.width();
  std::vector<Image> gray_s, gray_m, cgt, cgt_m, igt_s, igt_m;
  b.mask = Tensor(Shape{b.n, 1, b.h, b.w});
  for (size_t i = 0; i < exs.size(); ++i) {
    const auto& ex = exs[i];
    b.ids.push_back(ex.id);
    const Image gs = ex.i_gray.to_range(Range::Signed);
    const Image is = ex.i_gt.to_range(Range::Signed);
    gray_s.push_back(gs);
    gray_m.push_back(apply_mask(gs, ex.mask));
    cgt.push_back(ex.c_gt);
    cgt_m.push_back(apply_mask(ex.c_gt, ex.mask));
    igt_s.push_back(is);
    igt_m.push_back(apply_mask(is, ex.mask));
    for (int y = 0; y < b.h; ++y)
      for (int x = 0; x < b.w; ++x)
        b.mask.at(int(i), 0, y, x) = ex.mask.at(y, x);
  }
  b.gray_signed = stack_images(gray_s);
  b.gray_masked = stack_images(gray_m);
  b.c_gt = stack_images(cgt);
  b.c_gt_masked = stack_images(cgt_m);
  b.i_gt_signed = stack_images(igt_s);
  b.i_gt_masked = stack_images(igt_m);
  b.examples = exs;
  return b;
}

Tensor concat_tensors(const std::vector<const Tensor*>& parts) {
  const Shape s0 = parts[0]->shape;
  int c_total = 0;
  for (const auto* p : parts) c_total += p->shape.c;
  Tensor out(Shape{s0.n, c_total, s0.h, s0.w});
  const size_t plane = size_t(s0.h) * s0.w;
  for (int n = 0; n < s0.n; ++n) {
    int c_off = 0;
    for (const auto* p : parts) {
      std::copy_n(p->data() + size_t(n) * p->shape.c * plane,
                  size_t(p->shape.c) * plane,
                  out.data() + (size_t(n) * c_total + c_off) * plane);
      c_off += p->shape.c;
    }
  }
  return out;
}

// keep = x ⊙ (1 - mask), pointwise with the single mask plane broadcast.
Tensor masked_keep(const Tensor& x, const Tensor& mask) {
  Tensor out = x;
  const Shape s = x.shape;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x2 = 0; x2 < s.w; ++x2)
          if (mask.at(n, 0, y, x2) != 0.0) out.at(n, c, y, x2) = 0.0;
  return out;
}

Tensor composed_with(const Tensor& pred, const Tensor& gt, const Tensor& mask) {
  Tensor out = gt;
  const Shape s = gt.shape;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          if (mask.at(n, 0, y, x) != 0.0) out.at(n, c, y, x) = pred.at(n, c, y, x);
  return out;
}

// Frozen edge stage: soft prediction, hard threshold, splice into truth.
Tensor frozen_c_comp(const BatchTensors& b, const InpaintModel& model,
                     bool teacher_forcing) {
  if (teacher_forcing) return b.c_gt;
  const Tensor gen_in =
      concat_tensors({&b.gray_masked, &b.c_gt_masked, &b.mask});
  const Var pred = model.g1().forward(ag::constant(gen_in));
  Tensor hard = pred->val;
  for (auto& v : hard.v) v = v >= 0.5 ? 1.0 : 0.0;
  return composed_with(hard, b.c_gt, b.mask);
}

Tensor frozen_i_comp(const BatchTensors& b, const Tensor& c_comp,
                     const InpaintModel& model) {
  const Tensor gen_in = concat_tensors({&b.i_gt_masked, &c_comp});
  const Var pred = model.g2().forward(ag::constant(gen_in));
  return composed_with(pred->val, b.i_gt_signed, b.mask);
}

Var weighted_sum(std::vector<std::pair<Var, double>> terms) {
  Var total;
  for (auto& [v, w] : terms) {
    if (!v) continue;
    const Var scaled = w == 1.0 ? v : ag::scale(v, w);
    total = total ? ag::add(total, scaled) : scaled;
  }
  return total;
}

struct StepResult {
  LossBundle bundle;
  Tensor sample_output;  // first item of the generator's output
};

void check_finite(double v, const char* what, Stage stage, int step,
                  const BatchTensors& b, const std::string& run_dir) {
  if (std::isfinite(v)) return;
  std::string ids;
  for (const auto& id : b.ids) ids += id + " ";
  if (!run_dir.empty()) {
    std::ofstream dump(run_dir + "/diagnostic-" + stage_name(stage) + "-step-" +
                       std::to_string(step) + ".txt");
    dump << "non-finite " << what << " at stage " << stage_name(stage)
         << " step " << step << "\nbatch: " << ids << "\n";
  }
  throw NumericError("non-finite " + std::string(what) + " at stage " +
                     stage_name(stage) + " step " + std::to_string(step) +
                     " (batch: " + ids + ")");
}

}  // namespace

Image predict_edges(const TrainingExample& ex, const Generator& g1) {
  const Image gray_m = apply_mask(ex.i_gray.to_range(Range::Signed), ex.mask);
  const Image cgt_m = apply_mask(ex.c_gt, ex.mask);
  Tensor in(Shape{1, 3, ex.i_gt.height(), ex.i_gt.width()});
  std::copy_n(gray_m.data(), gray_m.size(), in.data());
  std::copy_n(cgt_m.data(), cgt_m.size(), in.data() + gray_m.size());
  for (int y = 0; y < ex.mask.height(); ++y)
    for (int x = 0; x < ex.mask.width(); ++x)
      in.at(0, 2, y, x) = ex.mask.at(y, x);
  const Var out = g1.forward(ag::constant(std::move(in)));
  return tensor_to_image(out->val, 0, ImageKind::Gray, Range::Unit);
}

Image compose_edges(const Image& c_pred_soft, const Image& c_gt,
                    const Mask& mask) {
  return compose(threshold_edges(c_pred_soft, 0.5), c_gt, mask);
}

Image fill_color(const TrainingExample& ex, const Image& c_comp,
                 const Generator& g2) {
  if (c_comp.kind() != ImageKind::Edge)
    throw FormatError("fill_color: conditioning edges must be binary");
  const Image rgb_m = apply_mask(ex.i_gt.to_range(Range::Signed), ex.mask);
  Tensor in(Shape{1, 4, ex.i_gt.height(), ex.i_gt.width()});
  std::copy_n(rgb_m.data(), rgb_m.size(), in.data());
  std::copy_n(c_comp.data(), c_comp.size(), in.data() + rgb_m.size());
  const Var out = g2.forward(ag::constant(std::move(in)));
  return tensor_to_image(out->val, 0, ImageKind::Rgb, Range::Signed);
}

Image refine(const Image& i_comp_signed, const Image& i_gt_masked_signed,
             const Generator& g3) {
  if (!i_comp_signed.same_geometry(i_gt_masked_signed))
    throw ShapeError("refine: geometry mismatch");
  Tensor in(Shape{1, 6, i_comp_signed.height(), i_comp_signed.width()});
  std::copy_n(i_comp_signed.data(), i_comp_signed.size(), in.data());
  std::copy_n(i_gt_masked_signed.data(), i_gt_masked_signed.size(),
              in.data() + i_comp_signed.size());
  const Var out = g3.forward(ag::constant(std::move(in)));
  return tensor_to_image(out->val, 0, ImageKind::Rgb, Range::Signed);
}

InpaintResult inpaint_detailed(const Image& rgb_unit, const Mask& mask,
                               const InpaintModel& model) {
  if (rgb_unit.kind() != ImageKind::Rgb || rgb_unit.range() != Range::Unit)
    throw FormatError("inpaint: input must be rgb in unit range");
  TrainingExample ex;
  ex.i_gt = rgb_unit;
  ex.i_gray = to_grayscale(rgb_unit);
  ex.c_gt = canny_edges(ex.i_gray, model.config().canny);
  ex.mask = mask;

  const Image c_pred = predict_edges(ex, model.g1());
  const Image c_comp = compose_edges(c_pred, ex.c_gt, mask);
  const Image i_pred_s = fill_color(ex, c_comp, model.g2());

  const Image gt_s = rgb_unit.to_range(Range::Signed);
  const Image i_comp_s = compose(i_pred_s, gt_s, mask);
  const Image masked_s = apply_mask(gt_s, mask);
  const Image i_ref_s = refine(i_comp_s, masked_s, model.g3());

  InpaintResult r;
  r.edge_map = c_comp;
  r.colour_rgb = compose(i_pred_s.to_range(Range::Unit), rgb_unit, mask);
  r.final_rgb = compose(i_ref_s.to_range(Range::Unit), rgb_unit, mask);
  return r;
}

Image inpaint(const Image& rgb_unit, const Mask& mask,
              const InpaintModel& model) {
  return inpaint_detailed(rgb_unit, mask, model).final_rgb;
}

namespace {

StepResult run_edge_step(InpaintModel& model, const BatchTensors& b,
                         Adam& adam_g, Adam& adam_d, const TrainConfig& cfg,
                         bool jigsaw_now, Rng& jrng) {
  const ModelConfig& mc = model.config();
  Tensor gen_in = concat_tensors({&b.gray_masked, &b.c_gt_masked, &b.mask});
  if (jigsaw_now) {
    // shuffle the conditioning stack; the target stays unshuffled
    for (int n = 0; n < b.n; ++n) {
      std::vector<int> perm(size_t(cfg.jigsaw_grid) * cfg.jigsaw_grid);
      std::iota(perm.begin(), perm.end(), 0);
      jrng.shuffle(perm);
      Image plane(b.h, b.w, ImageKind::Gray, Range::Signed);
      for (int c = 0; c < 3; ++c) {
        std::copy_n(gen_in.data() + (size_t(n) * 3 + c) * b.h * b.w,
                    size_t(b.h) * b.w, plane.data());
        const Image shuffled = jigsaw_apply(plane, cfg.jigsaw_grid, perm);
        std::copy_n(shuffled.data(), shuffled.size(),
                    gen_in.data() + (size_t(n) * 3 + c) * b.h * b.w);
      }
    }
  }
  const Var c_pred = model.g1().forward(ag::constant(std::move(gen_in)));
  const Tensor real_pair = concat_tensors({&b.c_gt, &b.gray_signed});
  const Var gray_const = ag::constant(b.gray_signed);

  // discriminator update
  {
    auto real = model.d1().forward(ag::constant(real_pair), true);
    auto fake = model.d1().forward(
        ag::concat_channels({ag::detach(c_pred), gray_const}), true);
    const Var d_loss =
        adversarial_loss(real.logits, fake.logits, GanSide::Discriminator);
    model.d1().params().zero_grads();
    model.g1().params().zero_grads();
    ag::backward(d_loss);
    adam_d.step();
  }

  // generator update against the refreshed discriminator
  auto real = model.d1().forward(ag::constant(real_pair), true);
  auto fake =
      model.d1().forward(ag::concat_channels({c_pred, gray_const}), true);
  const Var adv = adversarial_loss(nullptr, fake.logits, GanSide::Generator);
  std::vector<Var> real_acts;
  for (const auto& a : real.activations) real_acts.push_back(ag::detach(a));
  const Var fm = feature_matching_loss(real_acts, fake.activations);
  const Var total = weighted_sum({{adv, 1.0}, {fm, mc.lambda_fm}});
  model.d1().params().zero_grads();
  model.g1().params().zero_grads();
  ag::backward(total);
  adam_g.step();

  StepResult r;
  r.bundle = LossBundle{};
  r.bundle.adv = adv->val[0];
  r.bundle.fm = fm->val[0];
  r.sample_output = c_pred->val;
  return r;
}

StepResult run_fill_step(Stage stage, InpaintModel& model,
                         const BatchTensors& b, Adam& adam_g, Adam& adam_d,
                         const TrainConfig& cfg,
                         const FeatureExtractor& extractor) {
  const ModelConfig& mc = model.config();
  const Tensor c_comp = frozen_c_comp(b, model, cfg.teacher_forcing);

  Generator& G = stage == Stage::Colour ? model.g2() : model.g3();
  Discriminator& D = stage == Stage::Colour ? model.d2() : model.d3();

  Tensor gen_in, cond;  // cond joins both discriminator inputs
  if (stage == Stage::Colour) {
    cond = c_comp;
    gen_in = concat_tensors({&b.i_gt_masked, &cond});
  } else {
    cond = frozen_i_comp(b, c_comp, model);
    gen_in = concat_tensors({&cond, &b.i_gt_masked});
  }

  const Var pred = G.forward(ag::constant(std::move(gen_in)));
  const Var cond_const = ag::constant(cond);
  const Var gt_const = ag::constant(b.i_gt_signed);
  const Tensor real_pair = concat_tensors({&b.i_gt_signed, &cond});

  // discriminator update
  {
    auto real = D.forward(ag::constant(real_pair), true);
    auto fake =
        D.forward(ag::concat_channels({ag::detach(pred), cond_const}), true);
    const Var d_loss =
        adversarial_loss(real.logits, fake.logits, GanSide::Discriminator);
    D.params().zero_grads();
    G.params().zero_grads();
    ag::backward(d_loss);
    adam_d.step();
  }

  // generator update
  auto fake = D.forward(ag::concat_channels({pred, cond_const}), true);
  const Var adv = adversarial_loss(nullptr, fake.logits, GanSide::Generator);
  const Var l1 = l1_masked(pred, gt_const, b.mask);
  const Var perc = perceptual_loss(pred, gt_const, extractor);
  // style compares the spliced image so texture statistics stay anchored
  // to the unmasked truth
  const Var pred_comp =
      ag::add(ag::bmul(pred, ag::constant(b.mask)),
              ag::constant(masked_keep(b.i_gt_signed, b.mask)));
  const Var style = style_loss(pred_comp, gt_const, extractor);
  const Var total = weighted_sum({{adv, 1.0},
                                  {l1, mc.lambda_l1},
                                  {perc, mc.lambda_perc},
                                  {style, mc.lambda_style}});
  D.params().zero_grads();
  G.params().zero_grads();
  ag::backward(total);
  adam_g.step();

  StepResult r;
  r.bundle = LossBundle{};
  r.bundle.adv = adv->val[0];
  r.bundle.l1 = l1->val[0];
  r.bundle.perc = perc->val[0];
  r.bundle.style = style->val[0];
  r.sample_output = composed_with(pred->val, b.i_gt_signed, b.mask);
  return r;
}

void write_samples(const std::string& run_dir, Stage stage, int step,
                   const BatchTensors& b, const Tensor& output) {
  const std::string base =
      run_dir + "/samples/" + stage_name(stage) + "-step-" +
      std::to_string(step);
  const TrainingExample& ex = b.examples[0];
  save_image(ex.i_gt, base + "-gt.png");
  save_image(apply_mask(ex.i_gt, ex.mask), base + "-masked.png");
  if (stage == Stage::Edge) {
    const Image soft = tensor_to_image(output, 0, ImageKind::Gray, Range::Unit);
    save_image(threshold_edges(soft, 0.5), base + "-output.png");
  } else {
    const Image out_s =
        tensor_to_image(output, 0, ImageKind::Rgb, Range::Signed);
    save_image(out_s.to_range(Range::Unit), base + "-output.png");
  }
}

}  // namespace

MetricsLog train_stage(Stage stage, const ExampleSource& data,
                       InpaintModel& model, const TrainConfig& cfg,
                       const std::string& run_dir) {
  cfg.validate();
  MetricsLog log;
  if (cfg.steps_per_stage == 0) return log;

  Generator& G = stage == Stage::Edge ? model.g1()
               : stage == Stage::Colour ? model.g2()
                                        : model.g3();
  Discriminator& D = stage == Stage::Edge ? model.d1()
                   : stage == Stage::Colour ? model.d2()
                                            : model.d3();
  Adam adam_g(G.params().trainable_vars(),
              {cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  Adam adam_d(D.params().trainable_vars(),
              {cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});

  const auto extractor = make_extractor(model.config().extractor);
  BatchIterator iter(data.paths(), cfg.batch_size,
                     Rng::derive_seed(cfg.seed, "batches-" + stage_name(stage)));
  Rng jrng(Rng::derive_seed(cfg.seed, "jigsaw"));
  const int jigsaw_steps =
      cfg.jigsaw ? (cfg.jigsaw_steps > 0 ? cfg.jigsaw_steps
                                         : std::max(1, cfg.steps_per_stage / 10))
                 : 0;

  if (!run_dir.empty()) {
    fs::create_directories(run_dir + "/checkpoints");
    if (cfg.sample_every > 0) fs::create_directories(run_dir + "/samples");
  }

  int epoch = 0;
  auto batches = iter.epoch_batches(epoch);
  size_t bi = 0;
  for (int step = 1; step <= cfg.steps_per_stage; ++step) {
    if (bi == batches.size()) {
      ++epoch;
      batches = iter.epoch_batches(epoch);
      bi = 0;
    }
    std::vector<TrainingExample> exs;
    for (const auto& id : batches[bi]) exs.push_back(data.get(id, epoch));
    ++bi;
    const BatchTensors b = assemble_batch(exs);

    const bool jigsaw_now = stage == Stage::Edge && step <= jigsaw_steps;
    StepResult sr = stage == Stage::Edge
                        ? run_edge_step(model, b, adam_g, adam_d, cfg,
                                        jigsaw_now, jrng)
                        : run_fill_step(stage, model, b, adam_g, adam_d, cfg,
                                        *extractor);

    for (double v : {sr.bundle.adv, sr.bundle.l1, sr.bundle.perc,
                     sr.bundle.style, sr.bundle.fm})
      check_finite(v, "loss component", stage, step, b, run_dir);
    const ModelConfig& mc = model.config();
    sr.bundle = total_loss(sr.bundle.adv, sr.bundle.l1, sr.bundle.perc,
                           sr.bundle.style, sr.bundle.fm, mc.lambda_l1,
                           mc.lambda_perc, mc.lambda_style, mc.lambda_fm);
    log.push_back({step, stage_name(stage), sr.bundle});

    if (!run_dir.empty()) {
      const bool at_cadence =
          cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0;
      if (at_cadence || step == cfg.steps_per_stage)
        model.save(run_dir + "/checkpoints/stage-" + stage_name(stage) +
                   "-step-" + std::to_string(step) + ".ckpt");
      if (cfg.sample_every > 0 && step % cfg.sample_every == 0)
        write_samples(run_dir, stage, step, b, sr.sample_output);
    }
  }
  return log;
}

MetricsLog train_full(const ExampleSource& data, InpaintModel& model,
                      const TrainConfig& cfg, const std::string& run_dir) {
  MetricsLog log;
  for (const Stage stage : {Stage::Edge, Stage::Colour, Stage::Global}) {
    MetricsLog part = train_stage(stage, data, model, cfg, run_dir);
    log.insert(log.end(), part.begin(), part.end());
    if (!run_dir.empty()) write_metrics_csv(log, run_dir + "/metrics.csv");
  }
  return log;
}

}  // namespace ep
