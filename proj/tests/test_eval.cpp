#include <doctest.h>

#include <cmath>
#include <fstream>

#include "edgepaint/eval/eval.hpp"
#include "edgepaint/eval/plot.hpp"
#include "support/oracles.hpp"

using namespace ep;
using ep::testing::TempDir;

namespace {

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

}  // namespace

TEST_CASE("psnr frozen values") {
  const Image a = ep::testing::make_test_image(16, 16, 1);
  CHECK(psnr(a, a) == 100.0);

  // constant offset 0.1 -> mse 0.01 -> 20 dB
  Image base(8, 8, ImageKind::Gray, Range::Unit, 0.4);
  Image off(8, 8, ImageKind::Gray, Range::Unit, 0.5);
  CHECK(psnr(base, off) == doctest::Approx(20.0).epsilon(1e-9));

  // maximal corruption on unit range -> 0 dB
  Image black(4, 4, ImageKind::Gray, Range::Unit, 0.0);
  Image white(4, 4, ImageKind::Gray, Range::Unit, 1.0);
  CHECK(psnr(black, white) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("psnr properties") {
  Rng rng(800);
  Image a(8, 8, ImageKind::Rgb, Range::Unit);
  Image b(8, 8, ImageKind::Rgb, Range::Unit);
  for (auto& v : a.values()) v = rng.uniform();
  for (auto& v : b.values()) v = rng.uniform();

  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));

  // strictly decreasing in mse
  double prev = 1e300;
  for (double amp : {0.05, 0.1, 0.2, 0.4}) {
    Image noisy = a;
    for (size_t i = 0; i < noisy.size(); ++i)
      noisy.values()[i] = std::clamp(a.values()[i] + amp, 0.0, 2.0) / 2.0 * 2.0;
    Image shifted = a;
    for (auto& v : shifted.values()) v = std::clamp(v * (1 - amp), 0.0, 1.0);
    const double cur = psnr(a, shifted);
    CHECK(cur < prev);
    prev = cur;
  }

  // identical pixel permutation of both images leaves psnr unchanged
  std::vector<size_t> perm(64);
  std::iota(perm.begin(), perm.end(), size_t(0));
  Rng pr(801);
  for (size_t i = 63; i > 0; --i)
    std::swap(perm[i], perm[size_t(pr.uniform_int(0, std::int64_t(i)))]);
  Image ap = a, bp = b;
  for (int c = 0; c < 3; ++c)
    for (size_t k = 0; k < 64; ++k) {
      ap.values()[size_t(c) * 64 + k] = a.values()[size_t(c) * 64 + perm[k]];
      bp.values()[size_t(c) * 64 + k] = b.values()[size_t(c) * 64 + perm[k]];
    }
  CHECK(psnr(ap, bp) == doctest::Approx(psnr(a, b)).epsilon(1e-12));

  // signed pair matches its unit twin
  CHECK(psnr(a.to_range(Range::Signed), b.to_range(Range::Signed)) ==
        doctest::Approx(psnr(a, b)).epsilon(1e-9));

  Image small(4, 4, ImageKind::Rgb, Range::Unit);
  CHECK_THROWS_AS(psnr(a, small), ShapeError);
  CHECK_THROWS_AS(psnr(a, b.to_range(Range::Signed)), ShapeError);
}

TEST_CASE("evaluate with the ground-truth stub caps every row") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 4, 24, 900);
  const EvalReport r = evaluate(ground_truth_stub(), paths,
                                MaskSpec::rectangular(), 3, "stub", "");
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) {
    CHECK(row.psnr_db == 100.0);
    CHECK(row.mask_kind == "rectangular");
    CHECK(row.coverage >= 0.05);
    CHECK(row.coverage <= 0.30);
  }
  CHECK(r.by_kind.at("rectangular").mean == 100.0);
}

TEST_CASE("evaluate matches a standalone psnr recomputation") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 3, 24, 910);
  const std::uint64_t seed = 17;
  const EvalReport r =
      evaluate(zero_fill_stub(), paths, MaskSpec::rectangular(), seed, "zf", "");
  REQUIRE(r.rows.size() == 3);
  for (size_t i = 0; i < paths.size(); ++i) {
    const Image img = load_image(paths[i], Range::Unit);
    Rng rng = rng_for_item(seed, r.rows[i].id);
    const Mask mask =
        generate_mask(img.height(), img.width(), MaskSpec::rectangular(), rng);
    const double expect = psnr(apply_mask(img, mask), img);
    CHECK(r.rows[i].psnr_db == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.rows[i].coverage == doctest::Approx(mask_coverage(mask)));
  }
}

TEST_CASE("evaluate is deterministic and aggregates recompute") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 5, 24, 920);
  const EvalReport a =
      evaluate(zero_fill_stub(), paths, MaskSpec::salt_pepper(), 5, "zf", "");
  const EvalReport b =
      evaluate(zero_fill_stub(), paths, MaskSpec::salt_pepper(), 5, "zf", "");
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].psnr_db == b.rows[i].psnr_db);
    CHECK(a.rows[i].coverage == b.rows[i].coverage);
  }

  double mean = 0.0;
  for (const auto& row : a.rows) mean += row.psnr_db;
  mean /= double(a.rows.size());
  CHECK(a.by_kind.at("salt_pepper").mean == doctest::Approx(mean).epsilon(1e-9));

  CHECK_THROWS_AS(evaluate(zero_fill_stub(), {}, MaskSpec::rectangular(), 1,
                           "", ""),
                  DataError);
}

TEST_CASE("report csv matches its rows") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 3, 24, 930);
  const EvalReport r = evaluate(zero_fill_stub(), paths,
                                MaskSpec::rectangular(), 7, "zf", "");
  write_report_csv(r, tmp.file("metrics.csv"));
  std::ifstream in(tmp.file("metrics.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "id,mask_kind,coverage,psnr_db");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("mask-percentage sweep is monotone for the zero-fill stub") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 6, 24, 940);
  const std::vector<double> grid = {0.05, 0.15, 0.30};
  const SweepResult sweep = ablation_sweep(
      SweepAxis::MaskPercentage, {{"zero_fill", zero_fill_stub()}}, paths,
      MaskSpec::rectangular(), grid, 11);
  REQUIRE(sweep.points.size() == 3);
  CHECK(sweep.points[0].mean_psnr >= sweep.points[1].mean_psnr);
  CHECK(sweep.points[1].mean_psnr >= sweep.points[2].mean_psnr);

  write_sweep_csv(sweep, tmp.file("sweep.csv"));
  render_sweep_plot(sweep, tmp.file("sweep.png"));
  CHECK(std::filesystem::exists(tmp.file("sweep.csv")));
  const Image plot = load_image(tmp.file("sweep.png"), Range::Unit);
  CHECK(plot.kind() == ImageKind::Rgb);
  CHECK(plot.width() == 800);
  CHECK(plot.height() == 600);

  std::ifstream in(tmp.file("sweep.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "config,mask_percentage,mean_psnr_db");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);  // |configs| * |grid| = 1 * 3
}

TEST_CASE("sweeps cover the config x grid product") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 3, 24, 950);
  const SweepResult sweep = ablation_sweep(
      SweepAxis::ComponentSet,
      {{"full", ground_truth_stub()}, {"ablated", zero_fill_stub()}}, paths,
      MaskSpec::rectangular(), {0.15}, 12);
  REQUIRE(sweep.points.size() == 2);  // one grid point per config
  CHECK(sweep.points[0].config_label == "full");
  CHECK(sweep.points[0].mean_psnr == 100.0);
  CHECK(sweep.points[1].mean_psnr < 100.0);

  CHECK_THROWS_AS(ablation_sweep(SweepAxis::LossSet, {}, paths,
                                 MaskSpec::rectangular(), {0.1}, 1),
                  ConfigError);
  CHECK_THROWS_AS(
      ablation_sweep(SweepAxis::LossSet, {{"x", ground_truth_stub()}}, paths,
                     MaskSpec::rectangular(), {}, 1),
      ConfigError);
}

TEST_CASE("model-backed inpainter plugs into evaluation") {
  TempDir tmp;
  const auto paths = write_dataset(tmp, 2, 32, 960);
  ModelConfig mc;
  mc.image_size = 32;
  mc.gen_width = 8;
  mc.disc_width = 8;
  mc.res_blocks = 1;
  mc.cbam_reduction = 8;
  mc.extractor = "tiny_random";
  const InpaintModel model(mc, 44);
  const EvalReport r = evaluate(model_inpainter(model), paths,
                                MaskSpec::rectangular(), 4, "model",
                                model.config_hash());
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.psnr_db > 0.0);
    CHECK(row.psnr_db <= 100.0);
  }
  CHECK(r.config_hash == model.config_hash());
}
