#include <doctest.h>

#include <numeric>

#include "edgepaint/maskgen/maskgen.hpp"
#include "support/oracles.hpp"

using namespace ep;
using ep::testing::TempDir;

namespace {

bool masks_equal(const Mask& a, const Mask& b) {
  return a.height() == b.height() && a.width() == b.width() &&
         a.values() == b.values();
}

// a rectangular mask's ones form exactly their bounding box
bool is_single_rectangle(const Mask& m) {
  int y0 = m.height(), y1 = -1, x0 = m.width(), x1 = -1;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(y, x)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (y1 < 0) return false;
  return m.count_ones() == std::int64_t(y1 - y0 + 1) * (x1 - x0 + 1);
}

}  // namespace

TEST_CASE("rectangular mask with a pinned fraction") {
  MaskSpec spec = MaskSpec::rectangular(0.25, 0.25);
  Rng rng(101);
  const Mask m = rectangular_mask(16, 16, spec, rng);
  CHECK(m.count_ones() == 64);
  CHECK(mask_coverage(m) == doctest::Approx(0.25));
  CHECK(is_single_rectangle(m));
}

TEST_CASE("empty fraction band is rejected") {
  MaskSpec spec = MaskSpec::rectangular(0.0, 0.0);
  Rng rng(102);
  CHECK_THROWS_AS(rectangular_mask(16, 16, spec, rng), DataError);
}

TEST_CASE("infeasible area bands are rejected up front") {
  // 13 of 16 pixels needs a 13-area rectangle inside 4x4: impossible
  MaskSpec spec = MaskSpec::rectangular(13.0 / 16.0, 13.0 / 16.0);
  Rng rng(103);
  CHECK_THROWS_AS(rectangular_mask(4, 4, spec, rng), DataError);
}

TEST_CASE("rectangular draws stay in band") {
  MaskSpec spec = MaskSpec::rectangular(0.05, 0.30);
  Rng rng(104);
  for (int i = 0; i < 200; ++i) {
    const Mask m = rectangular_mask(64, 64, spec, rng);
    const double cov = mask_coverage(m);
    CHECK(cov >= 0.05);
    CHECK(cov <= 0.30);
    CHECK(is_single_rectangle(m));
  }
}

TEST_CASE("salt and pepper pins exact counts") {
  Rng rng(105);
  const Mask half = salt_pepper_mask(16, 16, MaskSpec::salt_pepper(0.5, 0.5), rng);
  CHECK(half.count_ones() == 128);

  const Mask full = salt_pepper_mask(8, 8, MaskSpec::salt_pepper(1.0, 1.0), rng);
  CHECK(full.count_ones() == 64);

  Rng a(7), b(7);
  const MaskSpec spec = MaskSpec::salt_pepper();
  CHECK(masks_equal(salt_pepper_mask(32, 32, spec, a),
                    salt_pepper_mask(32, 32, spec, b)));
}

TEST_CASE("salt and pepper respects the band across draws") {
  Rng rng(106);
  const MaskSpec spec = MaskSpec::salt_pepper(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const Mask m = salt_pepper_mask(48, 48, spec, rng);
    const double cov = mask_coverage(m);
    CHECK(cov >= 0.05);
    CHECK(cov <= 0.95);
  }
}

TEST_CASE("procedural irregular masks stay in band") {
  Rng rng(107);
  const MaskSpec spec = MaskSpec::irregular(0.05, 0.40);
  for (int i = 0; i < 100; ++i) {
    const Mask m = irregular_mask(64, 64, spec, rng);
    const double cov = mask_coverage(m);
    CHECK(cov >= 0.05);
    CHECK(cov <= 0.40);
    for (auto v : m.values()) CHECK((v == 0 || v == 1));
  }
}

TEST_CASE("irregular corpus masks load, binarize and crop") {
  TempDir tmp;
  Mask src(32, 32);
  for (int y = 10; y < 20; ++y)
    for (int x = 4; x < 28; ++x) src.at(y, x) = 1;
  save_mask(src, tmp.file("m0.png"));

  MaskSpec spec = MaskSpec::irregular(0.0, 1.0, tmp.path());
  Rng rng(108);
  const Mask same = irregular_mask(32, 32, spec, rng);
  CHECK(masks_equal(same, src));

  const Mask crop = irregular_mask(16, 16, spec, rng);
  CHECK(crop.height() == 16);
  CHECK(crop.width() == 16);

  const Mask grown = irregular_mask(64, 48, spec, rng);
  CHECK(grown.height() == 64);
  CHECK(grown.width() == 48);
  for (auto v : grown.values()) CHECK((v == 0 || v == 1));
}

TEST_CASE("empty corpus directory errors") {
  TempDir tmp;
  MaskSpec spec = MaskSpec::irregular(0.0, 1.0, tmp.path());
  Rng rng(109);
  CHECK_THROWS_AS(irregular_mask(16, 16, spec, rng), DataError);
  MaskSpec missing = MaskSpec::irregular(0.0, 1.0, tmp.path() + "/absent");
  CHECK_THROWS_AS(irregular_mask(16, 16, missing, rng), DataError);
}

TEST_CASE("spec validation and parsing") {
  MaskSpec bad = MaskSpec::rectangular(0.5, 0.2);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  MaskSpec neg = MaskSpec::rectangular(-0.1, 0.2);
  CHECK_THROWS_AS(neg.validate(), ConfigError);

  const MaskSpec parsed = parse_mask_spec("salt_pepper:0.1:0.6");
  CHECK(parsed.kind == MaskKind::SaltPepper);
  CHECK(parsed.min_frac == doctest::Approx(0.1));
  CHECK(parsed.max_frac == doctest::Approx(0.6));

  const MaskSpec defaults = parse_mask_spec("rectangular");
  CHECK(defaults.min_frac == doctest::Approx(0.05));
  CHECK(defaults.max_frac == doctest::Approx(0.30));

  const MaskSpec irr = parse_mask_spec("irregular:0.1:0.3:/some/dir");
  CHECK(irr.irregular_source == "/some/dir");

  CHECK_THROWS_AS(parse_mask_spec("blobs:0.1:0.2"), ConfigError);
  CHECK_THROWS_AS(parse_mask_spec("rectangular:x:y"), ConfigError);

  const MaskSpec round_trip = parse_mask_spec(format_mask_spec(parsed));
  CHECK(round_trip.kind == parsed.kind);
  CHECK(round_trip.min_frac == doctest::Approx(parsed.min_frac));
}

TEST_CASE("fixed seeds replay every mask kind bit-identically") {
  for (const MaskSpec spec : {MaskSpec::rectangular(), MaskSpec::salt_pepper(),
                              MaskSpec::irregular()}) {
    Rng a(40), b(40);
    CHECK(masks_equal(generate_mask(32, 32, spec, a),
                      generate_mask(32, 32, spec, b)));
  }
}

TEST_CASE("jigsaw shuffle round trips and relocates tiles") {
  const Image img = ep::testing::make_test_image(16, 16, 55);

  std::vector<int> identity(16);
  std::iota(identity.begin(), identity.end(), 0);
  const Image same = jigsaw_apply(img, 4, identity);
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(same.values()[i] == img.values()[i]);

  Rng rng(110);
  const auto [shuffled, perm] = jigsaw_shuffle(img, 4, rng);
  const Image back = jigsaw_unshuffle(shuffled, 4, perm);
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(back.values()[i] == img.values()[i]);

  // quadrant-coloured image moves whole quadrants
  Image quads(8, 8, ImageKind::Rgb, Range::Unit);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const int q = (y / 4) * 2 + (x / 4);
      for (int c = 0; c < 3; ++c) quads.at(c, y, x) = 0.2 + 0.2 * q;
    }
  Rng qr(111);
  const auto [qshuf, qperm] = jigsaw_shuffle(quads, 2, qr);
  for (int t = 0; t < 4; ++t) {
    const int sy = (qperm[size_t(t)] / 2) * 4, sx = (qperm[size_t(t)] % 2) * 4;
    const int dy = (t / 2) * 4, dx = (t % 2) * 4;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        CHECK(qshuf.at(0, dy + y, dx + x) == quads.at(0, sy + y, sx + x));
  }
}

TEST_CASE("jigsaw rejects non-divisible dimensions") {
  const Image img(9, 8, ImageKind::Gray, Range::Unit, 0.5);
  Rng rng(112);
  CHECK_THROWS_AS(jigsaw_shuffle(img, 4, rng), ShapeError);
}

TEST_CASE("coverage accounting") {
  CHECK(mask_coverage(Mask(16, 16, 0)) == 0.0);
  CHECK(mask_coverage(Mask(16, 16, 1)) == 1.0);
  Mask block(16, 16);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) block.at(y, x) = 1;
  CHECK(mask_coverage(block) == doctest::Approx(0.25));
}
