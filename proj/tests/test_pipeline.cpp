#include <doctest.h>

#include <cmath>
#include <fstream>

#include "edgepaint/pipeline/pipeline.hpp"
#include "support/oracles.hpp"

using namespace ep;
using ep::testing::TempDir;

namespace {

// small config that keeps stage steps fast on a laptop core
ModelConfig mini_config(int image_size = 32) {
  ModelConfig c;
  c.image_size = image_size;
  c.gen_width = 8;
  c.disc_width = 8;
  c.res_blocks = 2;
  c.cbam = true;
  c.cbam_reduction = 8;
  c.extractor = "tiny_random";
  return c;
}

Mask random_mask(int h, int w, double p, Rng& rng) {
  Mask m(h, w);
  for (auto& v : m.values()) v = rng.uniform() < p ? 1 : 0;
  return m;
}

// writes n synthetic images and returns their paths
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

std::vector<Tensor> snapshot(const NetworkParams& p, bool trainable_only) {
  std::vector<Tensor> out;
  for (const auto& e : p.entries())
    if (!trainable_only || e.trainable) out.push_back(e.var->val);
  return out;
}

bool same_values(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].v != b[i].v) return false;
  return true;
}

TrainingExample make_ex(int size, std::uint64_t seed, const CannyConfig& canny) {
  TrainingExample ex;
  ex.id = "ex" + std::to_string(seed);
  ex.i_gt = ep::testing::make_test_image(size, size, seed);
  ex.i_gray = to_grayscale(ex.i_gt);
  ex.c_gt = canny_edges(ex.i_gray, canny);
  Rng rng(seed * 31 + 1);
  ex.mask = generate_mask(size, size, MaskSpec::rectangular(), rng);
  return ex;
}

}  // namespace

TEST_CASE("model config hashes and descriptors are stable") {
  const ModelConfig a = mini_config();
  const ModelConfig b = mini_config();
  CHECK(a.hash_hex() == b.hash_hex());
  ModelConfig c = mini_config();
  c.res_blocks = 3;
  CHECK(a.hash_hex() != c.hash_hex());

  CHECK(a.g1_desc().in_channels == 3);
  CHECK(a.g1_desc().out_channels == 1);
  CHECK(a.g1_desc().head == OutputHead::Sigmoid);
  CHECK(a.g2_desc().in_channels == 4);
  CHECK(a.g2_desc().head == OutputHead::Tanh);
  CHECK(a.g3_desc().in_channels == 6);
  CHECK(a.d1_desc().in_channels == 2);
  CHECK(a.d2_desc().in_channels == 4);
  CHECK(a.d3_desc().in_channels == 6);

  const ModelConfig back = ModelConfig::from_json(a.to_json());
  CHECK(back.hash_hex() == a.hash_hex());
}

TEST_CASE("model save/load round trips at float32 precision") {
  TempDir tmp;
  const InpaintModel m(mini_config(), 11);
  m.save(tmp.file("m.ckpt"));
  const InpaintModel back = InpaintModel::load(tmp.file("m.ckpt"));
  CHECK(back.config_hash() == m.config_hash());

  const auto& a = m.g1().params().entries();
  const auto& b = back.g1().params().entries();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[i].var->val.size(); ++j)
      CHECK(b[i].var->val[j] == double(float(a[i].var->val[j])));

  // saving the loaded model reproduces the file byte-for-byte
  back.save(tmp.file("m2.ckpt"));
  std::ifstream f1(tmp.file("m.ckpt"), std::ios::binary);
  std::ifstream f2(tmp.file("m2.ckpt"), std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("tampered checkpoints are rejected") {
  TempDir tmp;
  const InpaintModel m(mini_config(), 12);
  m.save(tmp.file("m.ckpt"));
  Container c = read_container(tmp.file("m.ckpt"));
  c.meta["config_hash"] = "0000000000000000";
  write_container(c, tmp.file("bad.ckpt"));
  CHECK_THROWS_AS(InpaintModel::load(tmp.file("bad.ckpt")), CheckpointError);
  CHECK_THROWS_AS(InpaintModel::load(tmp.file("missing.ckpt")), CheckpointError);
}

TEST_CASE("predict_edges conditions on masked inputs") {
  const ModelConfig cfg = mini_config();
  const InpaintModel m(cfg, 13);
  const TrainingExample ex = make_ex(32, 21, cfg.canny);

  const Image soft = predict_edges(ex, m.g1());
  CHECK(soft.height() == 32);
  CHECK(soft.width() == 32);
  CHECK(soft.channels() == 1);
  for (double v : soft.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // degenerate mask still yields a well-formed map
  TrainingExample none = ex;
  none.mask = Mask(32, 32, 0);
  const Image soft2 = predict_edges(none, m.g1());
  CHECK(soft2.size() == soft.size());
}

TEST_CASE("compose_edges thresholds and splices") {
  Rng rng(600);
  Image soft(8, 8, ImageKind::Gray, Range::Unit);
  for (auto& v : soft.values()) v = rng.uniform();
  Image c_gt(8, 8, ImageKind::Edge, Range::Unit);
  for (auto& v : c_gt.values()) v = rng.uniform() < 0.2 ? 1.0 : 0.0;

  const Image zeros = compose_edges(soft, c_gt, Mask(8, 8, 0));
  CHECK(zeros.values() == c_gt.values());

  const Image ones = compose_edges(soft, c_gt, Mask(8, 8, 1));
  for (size_t i = 0; i < ones.size(); ++i)
    CHECK(ones.values()[i] == (soft.values()[i] >= 0.5 ? 1.0 : 0.0));

  const Mask half = random_mask(8, 8, 0.5, rng);
  const Image mixed = compose_edges(soft, c_gt, half);
  for (double v : mixed.values()) CHECK((v == 0.0 || v == 1.0));
  CHECK(mixed.kind() == ImageKind::Edge);
}

TEST_CASE("fill_color and refine respect shape and range contracts") {
  const ModelConfig cfg = mini_config();
  const InpaintModel m(cfg, 14);
  const TrainingExample ex = make_ex(32, 22, cfg.canny);
  const Image c_comp = compose_edges(predict_edges(ex, m.g1()), ex.c_gt, ex.mask);

  const Image i_pred = fill_color(ex, c_comp, m.g2());
  CHECK(i_pred.kind() == ImageKind::Rgb);
  CHECK(i_pred.range() == Range::Signed);
  for (double v : i_pred.values()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  const Image gt_s = ex.i_gt.to_range(Range::Signed);
  const Image i_comp = compose(i_pred, gt_s, ex.mask);
  const Image masked = apply_mask(gt_s, ex.mask);
  const Image refined = refine(i_comp, masked, m.g3());
  CHECK(refined.kind() == ImageKind::Rgb);
  CHECK(refined.height() == 32);

  const Image refined2 = refine(i_comp, masked, m.g3());
  CHECK(refined.values() == refined2.values());  // determinism

  const Image gray_cond(32, 32, ImageKind::Gray, Range::Unit, 0.5);
  CHECK_THROWS_AS(fill_color(ex, gray_cond, m.g2()), FormatError);
}

TEST_CASE("colour generator receives finite nonzero gradients at init") {
  const ModelConfig cfg = mini_config();
  InpaintModel m(cfg, 16);
  const TrainingExample ex = make_ex(32, 24, cfg.canny);
  const Image c_comp = compose_edges(predict_edges(ex, m.g1()), ex.c_gt, ex.mask);

  const Image rgb_m = apply_mask(ex.i_gt.to_range(Range::Signed), ex.mask);
  Tensor in(Shape{1, 4, 32, 32});
  std::copy_n(rgb_m.data(), rgb_m.size(), in.data());
  std::copy_n(c_comp.data(), c_comp.size(), in.data() + rgb_m.size());

  const auto pred = m.g2().forward(ag::constant(std::move(in)));
  const Tensor gt = image_to_tensor(ex.i_gt.to_range(Range::Signed));
  const auto loss = l1_masked(pred, ag::constant(gt), mask_to_tensor(ex.mask));
  m.g2().params().zero_grads();
  ag::backward(loss);

  double grad_l1 = 0.0;
  bool all_finite = true;
  for (const auto& e : m.g2().params().entries()) {
    if (!e.trainable || e.var->grad.empty()) continue;
    for (size_t i = 0; i < e.var->grad.size(); ++i) {
      if (!std::isfinite(e.var->grad[i])) all_finite = false;
      grad_l1 += std::abs(e.var->grad[i]);
    }
  }
  CHECK(all_finite);
  CHECK(grad_l1 > 0.0);
}

TEST_CASE("inpaint preserves unmasked pixels bit-exactly") {
  const ModelConfig cfg = mini_config();
  const InpaintModel m(cfg, 15);
  const Image img = ep::testing::make_test_image(32, 32, 23);

  const Image untouched = inpaint(img, Mask(32, 32, 0), m);
  CHECK(untouched.values() == img.values());

  Rng rng(601);
  for (int trial = 0; trial < 5; ++trial) {
    const Mask mask = random_mask(32, 32, rng.uniform(0.1, 0.6), rng);
    const Image out = inpaint(img, mask, m);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          if (!mask.at(y, x)) CHECK(out.at(c, y, x) == img.at(c, y, x));
  }

  const Mask mask = random_mask(32, 32, 0.3, rng);
  const Image a = inpaint(img, mask, m);
  const Image b = inpaint(img, mask, m);
  CHECK(a.values() == b.values());
}

TEST_CASE("example source draws fixed or per-epoch masks") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 2, 32, 700);
  const CannyConfig canny;

  const ExampleSource fixed(paths, MaskSpec::rectangular(), canny, 9, true);
  const auto f0 = fixed.get(paths[0], 0);
  const auto f5 = fixed.get(paths[0], 5);
  CHECK(f0.mask.values() == f5.mask.values());
  validate_example(f0, canny);

  const ExampleSource fresh(paths, MaskSpec::rectangular(), canny, 9, false);
  const auto e0 = fresh.get(paths[0], 0);
  const auto e1 = fresh.get(paths[0], 1);
  CHECK(e0.mask.values() != e1.mask.values());

  // fixed masks match the evaluation-time stream for the same seed
  Rng eval_rng = rng_for_item(9, f0.id);
  const Mask eval_mask =
      generate_mask(32, 32, MaskSpec::rectangular(), eval_rng);
  CHECK(f0.mask.values() == eval_mask.values());
}

TEST_CASE("train_stage bookkeeping and parameter movement") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 2, 32, 710);
  const ExampleSource data(paths, MaskSpec::rectangular(), CannyConfig{}, 5, true);

  InpaintModel model(mini_config(), 30);
  TrainConfig cfg;
  cfg.steps_per_stage = 3;
  cfg.batch_size = 2;
  cfg.seed = 77;

  SUBCASE("metrics rows equal steps and totals follow the weighted sum") {
    const MetricsLog log = train_stage(Stage::Edge, data, model, cfg);
    REQUIRE(log.size() == 3);
    for (const auto& r : log) {
      CHECK(r.stage == "edge");
      CHECK(r.bundle.l1 == 0.0);
      CHECK(r.bundle.perc == 0.0);
      CHECK(r.bundle.style == 0.0);
      CHECK(std::abs(r.bundle.total -
                     (r.bundle.adv + r.bundle.fm)) < 1e-9);
    }
  }

  SUBCASE("zero learning rates freeze all parameters") {
    cfg.lr_g = 0.0;
    cfg.lr_d = 0.0;
    const auto g_before = snapshot(model.g1().params(), true);
    const auto d_before = snapshot(model.d1().params(), true);
    train_stage(Stage::Edge, data, model, cfg);
    CHECK(same_values(g_before, snapshot(model.g1().params(), true)));
    CHECK(same_values(d_before, snapshot(model.d1().params(), true)));
  }

  SUBCASE("zero steps returns the model unchanged") {
    cfg.steps_per_stage = 0;
    const auto before = snapshot(model.g1().params(), false);
    const MetricsLog log = train_stage(Stage::Edge, data, model, cfg);
    CHECK(log.empty());
    CHECK(same_values(before, snapshot(model.g1().params(), false)));
  }

  SUBCASE("colour stage leaves the edge stage untouched") {
    const auto g1_before = snapshot(model.g1().params(), false);
    const auto d1_before = snapshot(model.d1().params(), false);
    const MetricsLog log = train_stage(Stage::Colour, data, model, cfg);
    CHECK(log.size() == 3);
    CHECK(same_values(g1_before, snapshot(model.g1().params(), false)));
    CHECK(same_values(d1_before, snapshot(model.d1().params(), false)));
    // and the colour generator did move
    CHECK(log[0].bundle.l1 > 0.0);
  }

  SUBCASE("colour stage logs all four components") {
    const MetricsLog log = train_stage(Stage::Colour, data, model, cfg);
    for (const auto& r : log) {
      CHECK(r.bundle.fm == 0.0);
      CHECK(r.bundle.l1 > 0.0);
      CHECK(std::abs(r.bundle.total - (r.bundle.adv + r.bundle.l1 +
                                       r.bundle.perc + r.bundle.style)) < 1e-9);
    }
  }

  SUBCASE("teacher forcing and jigsaw are accepted") {
    cfg.teacher_forcing = true;
    CHECK(train_stage(Stage::Colour, data, model, cfg).size() == 3);
    cfg.jigsaw = true;
    cfg.jigsaw_steps = 2;
    CHECK(train_stage(Stage::Edge, data, model, cfg).size() == 3);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 2, 32, 720);
  const ExampleSource data(paths, MaskSpec::rectangular(), CannyConfig{}, 5, true);

  TrainConfig cfg;
  cfg.steps_per_stage = 2;
  cfg.batch_size = 1;
  cfg.seed = 99;

  InpaintModel m1(mini_config(), 31);
  InpaintModel m2(mini_config(), 31);
  const MetricsLog l1 = train_full(data, m1, cfg);
  const MetricsLog l2 = train_full(data, m2, cfg);
  REQUIRE(l1.size() == l2.size());
  REQUIRE(l1.size() == 6);  // 3 stages x 2 steps
  for (size_t i = 0; i < l1.size(); ++i)
    CHECK(l1[i].bundle.total == l2[i].bundle.total);

  for (auto pair : {std::pair{&m1.g1(), &m2.g1()}, {&m1.g2(), &m2.g2()},
                    {&m1.g3(), &m2.g3()}})
    CHECK(same_values(snapshot(pair.first->params(), false),
                      snapshot(pair.second->params(), false)));
}

TEST_CASE("an edge-stage overfit run reduces the generator loss") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 1, 32, 730);
  const ExampleSource data(paths, MaskSpec::rectangular(), CannyConfig{}, 5, true);

  InpaintModel model(mini_config(), 32);
  TrainConfig cfg;
  cfg.steps_per_stage = 60;
  cfg.batch_size = 1;
  cfg.seed = 101;

  const MetricsLog log = train_stage(Stage::Edge, data, model, cfg);
  REQUIRE(log.size() == 60);
  double tail = 0.0;
  for (size_t i = log.size() - 5; i < log.size(); ++i)
    tail += log[i].bundle.total;
  tail /= 5.0;
  CHECK(tail < log[0].bundle.total);
}

TEST_CASE("non-finite parameters abort with a diagnostic") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 1, 32, 740);
  const ExampleSource data(paths, MaskSpec::rectangular(), CannyConfig{}, 5, true);

  InpaintModel model(mini_config(), 33);
  model.g1().params().entry("enc1.w").var->val[0] =
      std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.steps_per_stage = 1;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train_stage(Stage::Edge, data, model, cfg, tmp.path()),
                  NumericError);
  bool found_dump = false;
  for (const auto& e : std::filesystem::directory_iterator(tmp.path()))
    if (e.path().filename().string().rfind("diagnostic-", 0) == 0)
      found_dump = true;
  CHECK(found_dump);
}

TEST_CASE("run artifacts land in the run directory") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 2, 32, 750);
  const ExampleSource data(paths, MaskSpec::rectangular(), CannyConfig{}, 5, true);

  InpaintModel model(mini_config(), 34);
  TrainConfig cfg;
  cfg.steps_per_stage = 2;
  cfg.batch_size = 1;
  cfg.checkpoint_every = 1;
  cfg.sample_every = 1;
  const std::string run = tmp.file("run");
  std::filesystem::create_directories(run);
  const MetricsLog log = train_full(data, model, cfg, run);
  write_metrics_csv(log, run + "/metrics.csv");

  CHECK(std::filesystem::exists(run + "/metrics.csv"));
  CHECK(std::filesystem::exists(run + "/checkpoints/stage-edge-step-1.ckpt"));
  CHECK(std::filesystem::exists(run + "/checkpoints/stage-global-step-2.ckpt"));
  CHECK(std::filesystem::exists(run + "/samples"));

  // the checkpoint written mid-run is loadable
  const InpaintModel back =
      InpaintModel::load(run + "/checkpoints/stage-edge-step-1.ckpt");
  CHECK(back.config_hash() == model.config_hash());

  std::ifstream csv(run + "/metrics.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,stage,adv,l1,perc,style,fm,total");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.lr_g = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.adam_beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
