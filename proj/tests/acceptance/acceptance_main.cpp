// Acceptance suite: runs every gate criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edgepaint/cli/config.hpp"
#include "edgepaint/core/parallel.hpp"
#include "edgepaint/eval/eval.hpp"
#include "support/oracles.hpp"

using namespace ep;
using ep::testing::TempDir;

namespace {

struct Criterion {
  int id;
  const char* name;
  bool passed;
  double seconds;
  std::string detail;
};

std::vector<Criterion> g_results;

template <class Fn>
void run_criterion(int id, const char* name, Fn fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    detail = fn();
    ok = true;
  } catch (const std::exception& e) {
    detail = e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  g_results.push_back({id, name, ok, secs, detail});
  std::printf("[%s] %d. %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", id, name, secs,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
}

void require(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (auto& v : t.v) v = rng.uniform(lo, hi);
  return t;
}

Mask random_mask(int h, int w, double p, Rng& rng) {
  Mask m(h, w);
  for (auto& v : m.values()) v = rng.uniform() < p ? 1 : 0;
  return m;
}

std::vector<std::string> write_dataset(const TempDir& tmp, int n, int size,
                                       std::uint64_t seed) {
  std::vector<std::string> paths;
  for (int i = 0; i < n; ++i) {
    const std::string p = tmp.file("img" + std::to_string(i) + ".png");
    save_image(ep::testing::make_test_image(size, size, seed + i), p);
    paths.push_back(p);
  }
  return paths;
}

// ---- 1. shape suite -------------------------------------------------------
std::string shape_suite() {
  ModelConfig mc;  // full production widths at 256
  InpaintModel model(mc, 7);
  Rng rng(1);

  std::vector<std::pair<std::string, Shape>> log;
  const auto g_out = model.g1().forward(
      ag::constant(random_tensor(Shape{1, 3, 256, 256}, rng)), &log);
  require(g_out->val.shape == Shape{1, 1, 256, 256},
          "generator output is not 256x256");
  for (const auto& [tag, shape] : log)
    if (tag == "bottleneck")
      require(shape == Shape{1, 256, 32, 32},
              "bottleneck is " + shape.str() + ", want {1,256,32,32}");

  const auto d_out = model.d1().forward(
      ag::constant(random_tensor(Shape{1, 2, 256, 256}, rng)), false);
  require(d_out.logits->val.shape == Shape{1, 1, 28, 28},
          "discriminator grid is " + d_out.logits->val.shape.str() +
              ", want 28x28");
  require(d_out.activations.size() == 6, "expected 6 activation maps");
  for (const auto& a : d_out.activations)
    for (size_t i = 0; i < a->val.size(); ++i)
      require(std::isfinite(a->val[i]), "non-finite activation");
  return "generator 256->256, bottleneck 32x32x256, discriminator 28x28 with 6 maps";
}

// ---- 2. gradient suite ----------------------------------------------------
std::string gradient_suite() {
  Rng rng(2);
  Rng probe(3);
  const Shape img_shape{1, 2, 4, 4};
  auto pred = ag::leaf(random_tensor(img_shape, rng, -0.8, 0.8));
  const Tensor gt = random_tensor(img_shape, rng, -0.8, 0.8);
  double worst = 0.0;

  {  // adversarial, both sides
    auto build_d = [&] {
      return adversarial_loss(pred, ag::constant(gt), GanSide::Discriminator);
    };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build_d, {pred}, 16, 1e-6, probe));
    auto build_g = [&] { return adversarial_loss(nullptr, pred, GanSide::Generator); };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build_g, {pred}, 16, 1e-6, probe));
  }
  {  // feature matching
    auto build = [&] { return feature_matching_loss({ag::constant(gt)}, {pred}); };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build, {pred}, 16, 1e-6, probe));
  }
  {  // perceptual
    TinyConvExtractor tiny(2, 7);
    auto build = [&] { return perceptual_loss(pred, ag::constant(gt), tiny); };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build, {pred}, 16, 1e-6, probe));
  }
  {  // style
    TinyConvExtractor tiny(2, 8);
    auto build = [&] { return style_loss(pred, ag::constant(gt), tiny); };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build, {pred}, 16, 1e-6, probe));
  }
  {  // mask-normalized L1
    Tensor mask(Shape{1, 1, 4, 4});
    Rng mr(4);
    for (auto& v : mask.v) v = mr.uniform() < 0.5 ? 1.0 : 0.0;
    mask.at(0, 0, 1, 1) = 1.0;
    auto build = [&] { return l1_masked(pred, ag::constant(gt), mask); };
    worst = std::max(worst, ep::testing::fd_max_rel_err(build, {pred}, 16, 1e-6, probe));
  }
  require(worst < 1e-4, "loss gradient rel err " + std::to_string(worst));

  // miniature generator end to end
  GeneratorDescriptor d;
  d.in_channels = 3;
  d.out_channels = 1;
  d.base_width = 8;
  d.res_blocks = 2;
  d.cbam = true;
  d.cbam_reduction = 8;
  const Generator g(d, 2024);
  auto x = ag::leaf(random_tensor(Shape{1, 3, 16, 16}, rng, -0.9, 0.9));
  const Tensor dir = random_tensor(Shape{1, 1, 16, 16}, rng);
  auto build = [&] { return ag::sum(ag::mul(g.forward(x), ag::constant(dir))); };
  std::vector<ag::Var> leaves = {x};
  for (const auto& e : g.params().entries())
    if (e.trainable) leaves.push_back(e.var);
  const double gen_err = ep::testing::fd_max_rel_err(build, leaves, 3, 1e-6, probe);
  require(gen_err < 1e-3, "generator e2e rel err " + std::to_string(gen_err));

  std::ostringstream out;
  out << "loss rel err " << worst << ", generator e2e rel err " << gen_err;
  return out.str();
}

// ---- 3. composition suite -------------------------------------------------
std::string composition_suite() {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 4 + int(rng.uniform_int(0, 8));
    const int w = 4 + int(rng.uniform_int(0, 8));
    Image pred(h, w, ImageKind::Rgb, Range::Unit);
    Image gt(h, w, ImageKind::Rgb, Range::Unit);
    for (auto& v : pred.values()) v = rng.uniform();
    for (auto& v : gt.values()) v = rng.uniform();
    const Mask m = random_mask(h, w, rng.uniform(), rng);
    const Image out = compose(pred, gt, m);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          require(out.at(c, y, x) ==
                      (m.at(y, x) ? pred.at(c, y, x) : gt.at(c, y, x)),
                  "compose broke exactness");
  }

  ModelConfig mc;
  mc.image_size = 16;
  mc.gen_width = 8;
  mc.disc_width = 8;
  mc.res_blocks = 1;
  mc.cbam_reduction = 8;
  mc.extractor = "tiny_random";
  const InpaintModel model(mc, 9);  // random weights
  for (int trial = 0; trial < 1000; ++trial) {
    const Image img = ep::testing::make_test_image(16, 16, 5000 + trial);
    const Mask m = random_mask(16, 16, rng.uniform(0.05, 0.6), rng);
    const Image out = inpaint(img, m, model);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
          if (!m.at(y, x))
            require(out.at(c, y, x) == img.at(c, y, x),
                    "inpaint altered an unmasked pixel");
  }
  return "1000 compose + 1000 inpaint triples bit-exact off-mask";
}

// ---- 4. mask suite --------------------------------------------------------
std::string mask_suite() {
  const int n = 1000;
  {
    Rng rng(6);
    const MaskSpec spec = MaskSpec::rectangular(0.05, 0.30);
    for (int i = 0; i < n; ++i) {
      const Mask m = rectangular_mask(256, 256, spec, rng);
      const double cov = mask_coverage(m);
      require(cov >= 0.05 && cov <= 0.30,
              "rectangular coverage " + std::to_string(cov));
    }
  }
  {
    Rng rng(7);
    const MaskSpec spec = MaskSpec::salt_pepper(0.05, 0.95);
    for (int i = 0; i < n; ++i) {
      const Mask m = salt_pepper_mask(256, 256, spec, rng);
      const double cov = mask_coverage(m);
      require(cov >= 0.05 && cov <= 0.95,
              "salt/pepper coverage " + std::to_string(cov));
    }
  }
  {
    Rng rng(8);
    const MaskSpec spec = MaskSpec::irregular(0.05, 0.50);
    for (int i = 0; i < n; ++i) {
      const Mask m = irregular_mask(128, 128, spec, rng);
      const double cov = mask_coverage(m);
      require(cov >= 0.05 && cov <= 0.50,
              "irregular coverage " + std::to_string(cov));
    }
  }
  // seed determinism: bit-identical replays for each kind
  for (const MaskSpec spec : {MaskSpec::rectangular(), MaskSpec::salt_pepper(),
                              MaskSpec::irregular()}) {
    Rng a(99), b(99);
    for (int i = 0; i < 10; ++i) {
      const Mask ma = generate_mask(96, 96, spec, a);
      const Mask mb = generate_mask(96, 96, spec, b);
      require(ma.values() == mb.values(), "mask replay diverged");
    }
  }
  return "3000 draws in band, replays bit-identical";
}

// ---- 5. loss-formula oracles ----------------------------------------------
std::string loss_oracles() {
  // discriminator loss at zero logits = 2 ln 2
  auto zeros = ag::constant(Tensor::zeros(Shape{1, 1, 4, 4}));
  require(std::abs(adversarial_loss(zeros, zeros, GanSide::Discriminator)->val[0] -
                   2.0 * std::log(2.0)) < 1e-9,
          "2ln2 oracle");

  // feature matching: two constant layers differing by 0.5 -> 1.0
  auto r1 = ag::constant(Tensor::full(Shape{1, 2, 3, 3}, 0.7));
  auto f1 = ag::constant(Tensor::full(Shape{1, 2, 3, 3}, 0.2));
  auto r2 = ag::constant(Tensor::full(Shape{1, 4, 5, 5}, -0.1));
  auto f2 = ag::constant(Tensor::full(Shape{1, 4, 5, 5}, 0.4));
  require(std::abs(feature_matching_loss({r1, r2}, {f1, f2})->val[0] - 1.0) < 1e-9,
          "feature matching oracle");

  // gram: C=2, rows (1,1,1,1)/(0,0,0,0) -> [[0.5,0],[0,0]]
  Tensor f(Shape{1, 2, 1, 4});
  for (int k = 0; k < 4; ++k) f.at(0, 0, 0, k) = 1.0;
  const Tensor g = gram_matrix(f);
  require(std::abs(g.at(0, 0, 0, 0) - 0.5) < 1e-9 && g.at(0, 0, 0, 1) == 0.0 &&
              g.at(0, 0, 1, 1) == 0.0,
          "gram oracle");

  // style loss against the brute-force gram difference
  Rng rng(10);
  const Tensor a = random_tensor(Shape{1, 2, 3, 3}, rng);
  const Tensor b = random_tensor(Shape{1, 2, 3, 3}, rng);
  const auto ga = ep::testing::brute_gram(a, 0);
  const auto gb = ep::testing::brute_gram(b, 0);
  double expect = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      expect += std::abs(ga[size_t(i)][size_t(j)] - gb[size_t(i)][size_t(j)]);
  IdentityExtractor id;
  require(std::abs(style_loss(ag::constant(a), ag::constant(b), id)->val[0] -
                   expect) < 1e-9,
          "style oracle");

  // masked L1: 0.2 residual over half the pixels -> 0.4
  auto gt = ag::constant(Tensor::zeros(Shape{1, 3, 4, 4}));
  auto pred = ag::constant(Tensor::full(Shape{1, 3, 4, 4}, 0.2));
  Tensor half(Shape{1, 1, 4, 4});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) half.at(0, 0, y, x) = 1.0;
  require(std::abs(l1_masked(pred, gt, half)->val[0] - 0.4) < 1e-9,
          "masked L1 oracle");
  return "all hand-computed values match to 1e-9";
}

// ---- 6. overfit experiment -------------------------------------------------
std::string overfit_experiment() {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 8, 64, 100);

  ModelConfig mc;
  mc.image_size = 64;
  mc.gen_width = 8;
  mc.disc_width = 8;
  mc.res_blocks = 8;
  mc.cbam_reduction = 8;
  mc.extractor = "tiny_random";
  InpaintModel model(mc, 1);

  const std::uint64_t mask_seed = 42;
  const ExampleSource data(paths, MaskSpec::rectangular(), mc.canny, mask_seed,
                           /*fixed_masks=*/true);
  TrainConfig cfg;
  cfg.steps_per_stage = 1500;  // <= 2000 per stage
  cfg.batch_size = 2;
  cfg.seed = 5;
  cfg.fixed_masks = true;
  const MetricsLog log = train_full(data, model, cfg);
  require(int(log.size()) == 3 * cfg.steps_per_stage, "metrics row count");

  double mean_final = 0.0, mean_colour = 0.0;
  for (const auto& p : paths) {
    const Image img = load_image(p, Range::Unit);
    const std::string id = std::filesystem::path(p).stem().string();
    Rng rng = rng_for_item(mask_seed, id);
    const Mask mask = generate_mask(64, 64, MaskSpec::rectangular(), rng);
    const InpaintResult r = inpaint_detailed(img, mask, model);
    mean_final += psnr(r.final_rgb, img);
    mean_colour += psnr(r.colour_rgb, img);
  }
  mean_final /= 8.0;
  mean_colour /= 8.0;

  // edge-stage sanity on one training image: thresholded prediction matches
  // the true edges on at least 90% of masked pixels
  const Image img0 = load_image(paths[0], Range::Unit);
  TrainingExample ex;
  ex.i_gt = img0;
  ex.i_gray = to_grayscale(img0);
  ex.c_gt = canny_edges(ex.i_gray, mc.canny);
  Rng mrng = rng_for_item(mask_seed, std::filesystem::path(paths[0]).stem().string());
  ex.mask = generate_mask(64, 64, MaskSpec::rectangular(), mrng);
  const Image soft = predict_edges(ex, model.g1());
  int agree = 0, total = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (ex.mask.at(y, x)) {
        ++total;
        if ((soft.at(0, y, x) >= 0.5 ? 1.0 : 0.0) == ex.c_gt.at(0, y, x)) ++agree;
      }
  const double edge_acc = total ? double(agree) / total : 1.0;

  std::ostringstream out;
  out << "final " << mean_final << " dB, colour " << mean_colour
      << " dB, masked-edge agreement " << edge_acc;
  require(mean_final > 25.0, "mean PSNR " + std::to_string(mean_final) +
                                 " dB <= 25 dB: " + out.str());
  require(mean_final >= mean_colour,
          "global stage did not improve on colour: " + out.str());
  require(edge_acc >= 0.90, "edge agreement " + std::to_string(edge_acc));
  return out.str();
}

// ---- 7. weighted-total wiring ----------------------------------------------
std::string total_wiring() {
  TempDir tmp;
  write_dataset(tmp, 2, 32, 300);

  // the smoke run goes through the declarative config surface
  std::ostringstream cfg_text;
  cfg_text << "seed = 7\n"
           << "data_dir = " << tmp.path() << "\n"
           << "image_size = 32\n"
           << "gen_width = 8\n"
           << "disc_width = 8\n"
           << "res_blocks = 1\n"
           << "cbam_reduction = 8\n"
           << "extractor = tiny_random\n"
           << "batch_size = 1\n"
           << "steps_per_stage = 5\n"
           << "lambda_l1 = 1\nlambda_perc = 1\nlambda_style = 1\nlambda_fm = 1\n";
  const RunConfig rc = RunConfig::from_text(cfg_text.str());

  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(tmp.path()))
    if (e.path().extension() == ".png") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());

  const ExampleSource data(paths, rc.mask_spec(), rc.canny_config(),
                           rc.mask_spec().seed, false);
  InpaintModel model(rc.model_config(), 11);
  const MetricsLog log = train_full(data, model, rc.train_config());
  require(log.size() == 15, "expected 15 smoke steps");

  double worst = 0.0;
  for (const auto& row : log) {
    const double sum = row.bundle.adv + row.bundle.l1 + row.bundle.perc +
                       row.bundle.style + row.bundle.fm;
    worst = std::max(worst, std::abs(row.bundle.total - sum));
  }
  require(worst < 1e-9, "total deviates from component sum by " +
                            std::to_string(worst));

  // the csv reloads with the same identity
  write_metrics_csv(log, tmp.file("metrics.csv"));
  std::ifstream in(tmp.file("metrics.csv"));
  std::string line;
  std::getline(in, line);
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');  // step
    std::getline(ss, tok, ',');  // stage
    while (std::getline(ss, tok, ',')) cols.push_back(std::stod(tok));
    require(cols.size() == 6, "csv column count");
    const double sum = cols[0] + cols[1] + cols[2] + cols[3] + cols[4];
    require(std::abs(cols[5] - sum) < 1e-9, "csv total mismatch");
    ++checked;
  }
  require(checked == 15, "csv row count");
  std::ostringstream out;
  out << "max |total - sum| = " << worst << " over 15 steps";
  return out.str();
}

// ---- 8. ablation-harness smoke ----------------------------------------------
std::string ablation_smoke() {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 6, 64, 400);
  const std::vector<double> grid = {0.05, 0.15, 0.30};
  const SweepResult sweep = ablation_sweep(
      SweepAxis::MaskPercentage, {{"zero_fill", zero_fill_stub()}}, paths,
      MaskSpec::rectangular(), grid, 13);
  require(sweep.points.size() == 3, "sweep row count");
  require(sweep.points[0].mean_psnr >= sweep.points[1].mean_psnr &&
              sweep.points[1].mean_psnr >= sweep.points[2].mean_psnr,
          "psnr not non-increasing across coverages");

  write_sweep_csv(sweep, tmp.file("sweep.csv"));
  render_sweep_plot(sweep, tmp.file("sweep.png"));
  require(std::filesystem::exists(tmp.file("sweep.csv")), "csv missing");
  const Image plot = load_image(tmp.file("sweep.png"), Range::Unit);
  require(plot.kind() == ImageKind::Rgb, "plot not rgb");

  std::ostringstream out;
  out << "psnr " << sweep.points[0].mean_psnr << " >= "
      << sweep.points[1].mean_psnr << " >= " << sweep.points[2].mean_psnr
      << " dB";
  return out.str();
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion(1, "shape suite", shape_suite);
  run_criterion(2, "gradient suite", gradient_suite);
  run_criterion(3, "composition suite", composition_suite);
  run_criterion(4, "mask suite", mask_suite);
  run_criterion(5, "loss-formula oracles", loss_oracles);
  run_criterion(6, "overfit experiment", overfit_experiment);
  run_criterion(7, "weighted-total wiring", total_wiring);
  run_criterion(8, "ablation-harness smoke", ablation_smoke);

  int failed = 0;
  for (const auto& c : g_results)
    if (!c.passed) ++failed;
  std::printf("%d/%zu criteria passed\n", int(g_results.size()) - failed,
              g_results.size());
  return failed == 0 ? 0 : 1;
}
