#include "edgepaint/maskgen/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "edgepaint/core/errors.hpp"

namespace fs = std::filesystem;

namespace ep {

std::string mask_kind_name(MaskKind k) {
  switch (k) {
    case MaskKind::Rectangular: return "rectangular";
    case MaskKind::SaltPepper: return "salt_pepper";
    case MaskKind::Irregular: return "irregular";
  }
  return "?";
}

MaskKind mask_kind_from_name(const std::string& name) {
  if (name == "rectangular") return MaskKind::Rectangular;
  if (name == "salt_pepper") return MaskKind::SaltPepper;
  if (name == "irregular") return MaskKind::Irregular;
  throw ConfigError("unknown mask kind: " + name);
}

MaskSpec MaskSpec::rectangular(double min_frac, double max_frac) {
  return MaskSpec{MaskKind::Rectangular, min_frac, max_frac, 0, "procedural"};
}
MaskSpec MaskSpec::salt_pepper(double min_frac, double max_frac) {
  return MaskSpec{MaskKind::SaltPepper, min_frac, max_frac, 0, "procedural"};
}
MaskSpec MaskSpec::irregular(double min_frac, double max_frac,
                             std::string source) {
  return MaskSpec{MaskKind::Irregular, min_frac, max_frac, 0, std::move(source)};
}

void MaskSpec::validate() const {
  if (!(min_frac >= 0.0 && min_frac <= max_frac && max_frac <= 1.0))
    throw ConfigError("mask spec requires 0 <= min_frac <= max_frac <= 1, got " +
                      std::to_string(min_frac) + ".." + std::to_string(max_frac));
}

MaskSpec parse_mask_spec(const std::string& text) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t colon = text.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.empty() || parts[0].empty())
    throw ConfigError("empty mask spec");
  MaskSpec spec;
  spec.kind = mask_kind_from_name(parts[0]);
  switch (spec.kind) {
    case MaskKind::Rectangular: spec = MaskSpec::rectangular(); break;
    case MaskKind::SaltPepper: spec = MaskSpec::salt_pepper(); break;
    case MaskKind::Irregular: spec = MaskSpec::irregular(); break;
  }
  try {
    if (parts.size() > 1 && !parts[1].empty()) spec.min_frac = std::stod(parts[1]);
    if (parts.size() > 2 && !parts[2].empty()) spec.max_frac = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("bad mask spec fractions: " + text);
  }
  if (parts.size() > 3 && !parts[3].empty()) spec.irregular_source = parts[3];
  spec.validate();
  return spec;
}

std::string format_mask_spec(const MaskSpec& spec) {
  std::string s = mask_kind_name(spec.kind) + ":" + std::to_string(spec.min_frac) +
                  ":" + std::to_string(spec.max_frac);
  if (spec.kind == MaskKind::Irregular) s += ":" + spec.irregular_source;
  return s;
}

namespace {

constexpr int kMaxAttempts = 1000;

// Integer-area band implied by the fraction band, empty if hi < lo.
std::pair<std::int64_t, std::int64_t> area_band(int h, int w, double min_frac,
                                                double max_frac) {
  const double hw = double(h) * w;
  const auto lo = std::int64_t(std::ceil(min_frac * hw - 1e-9));
  const auto hi = std::int64_t(std::floor(max_frac * hw + 1e-9));
  return {std::max<std::int64_t>(lo, 0), std::min<std::int64_t>(hi, std::int64_t(hw))};
}

bool rectangle_band_feasible(int h, int w, std::int64_t lo, std::int64_t hi) {
  if (hi < 1 || hi < lo) return false;
  for (int a = 1; a <= h; ++a) {
    const std::int64_t bmin = (lo + a - 1) / a;
    const std::int64_t bmax = std::min<std::int64_t>(w, hi / a);
    if (bmin <= std::max<std::int64_t>(bmax, 0) && bmax >= 1) return true;
  }
  return false;
}

}  // namespace

Mask rectangular_mask(int h, int w, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != MaskKind::Rectangular)
    throw ConfigError("rectangular_mask: spec kind mismatch");
  if (h < 1 || w < 1) throw ShapeError("rectangular_mask: empty image");
  const auto [lo, hi] = area_band(h, w, spec.min_frac, spec.max_frac);
  if (!rectangle_band_feasible(h, w, lo, hi))
    throw DataError("no integer rectangle covers a fraction in [" +
                    std::to_string(spec.min_frac) + ", " +
                    std::to_string(spec.max_frac) + "] of " + std::to_string(h) +
                    "x" + std::to_string(w));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int rh = int(rng.uniform_int(1, h));
    const int rw = int(rng.uniform_int(1, w));
    const std::int64_t area = std::int64_t(rh) * rw;
    if (area < lo || area > hi) continue;
    const int top = int(rng.uniform_int(0, h - rh));
    const int left = int(rng.uniform_int(0, w - rw));
    Mask m(h, w);
    for (int y = top; y < top + rh; ++y)
      for (int x = left; x < left + rw; ++x) m.at(y, x) = 1;
    return m;
  }
  throw DataError("rectangular_mask: no in-band rectangle after " +
                  std::to_string(kMaxAttempts) + " attempts");
}

Mask salt_pepper_mask(int h, int w, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != MaskKind::SaltPepper)
    throw ConfigError("salt_pepper_mask: spec kind mismatch");
  const std::int64_t hw = std::int64_t(h) * w;
  const double f = rng.uniform(spec.min_frac, spec.max_frac);
  std::int64_t count = std::llround(f * double(hw));
  const auto [lo, hi] = area_band(h, w, spec.min_frac, spec.max_frac);
  if (lo <= hi) count = std::clamp(count, lo, hi);
  count = std::clamp<std::int64_t>(count, 0, hw);

  std::vector<std::int64_t> idx(static_cast<std::size_t>(hw));
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates: the first `count` slots end up uniform w/o replacement
  for (std::int64_t i = 0; i < count; ++i) {
    const auto j = rng.uniform_int(i, hw - 1);
    std::swap(idx[size_t(i)], idx[size_t(j)]);
  }
  Mask m(h, w);
  for (std::int64_t i = 0; i < count; ++i) m.values()[size_t(idx[size_t(i)])] = 1;
  return m;
}

namespace {

void stamp_disk(Mask& m, double cy, double cx, double radius) {
  const int y0 = std::max(0, int(std::floor(cy - radius)));
  const int y1 = std::min(m.height() - 1, int(std::ceil(cy + radius)));
  const int x0 = std::max(0, int(std::floor(cx - radius)));
  const int x1 = std::min(m.width() - 1, int(std::ceil(cx + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= radius * radius)
        m.at(y, x) = 1;
}

Mask procedural_strokes(int h, int w, const MaskSpec& spec, Rng& rng) {
  const double two_pi = 2.0 * 3.14159265358979323846;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Mask m(h, w);
    const double target = rng.uniform(spec.min_frac, spec.max_frac);
    const double rmax = std::max(2.0, std::min(h, w) / 12.0);
    const double rmin = std::max(1.0, std::min(h, w) / 32.0);
    bool overshoot = false;
    while (mask_coverage(m) < target) {
      double y = rng.uniform(0, h - 1);
      double x = rng.uniform(0, w - 1);
      double angle = rng.uniform(0.0, two_pi);
      const double radius = rng.uniform(rmin, rmax);
      const int steps = int(rng.uniform_int(4, 16));
      for (int s = 0; s < steps; ++s) {
        stamp_disk(m, y, x, radius);
        angle += rng.uniform(-0.7, 0.7);
        y += std::sin(angle) * radius;
        x += std::cos(angle) * radius;
        y = std::clamp(y, 0.0, double(h - 1));
        x = std::clamp(x, 0.0, double(w - 1));
        if (mask_coverage(m) >= target) break;
      }
      if (mask_coverage(m) > spec.max_frac) {
        overshoot = true;
        break;
      }
    }
    const double cov = mask_coverage(m);
    if (!overshoot && cov >= spec.min_frac && cov <= spec.max_frac) return m;
  }
  throw DataError("irregular_mask: could not land coverage in [" +
                  std::to_string(spec.min_frac) + ", " +
                  std::to_string(spec.max_frac) + "] after " +
                  std::to_string(kMaxAttempts) + " attempts");
}

Mask corpus_mask(int h, int w, const MaskSpec& spec, Rng& rng) {
  std::vector<std::string> files;
  if (!fs::is_directory(spec.irregular_source))
    throw DataError("irregular mask source is not a directory: " +
                    spec.irregular_source);
  for (const auto& entry : fs::directory_iterator(spec.irregular_source))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path().string());
  if (files.empty())
    throw DataError("empty mask directory: " + spec.irregular_source);
  std::sort(files.begin(), files.end());
  const auto pick = size_t(rng.uniform_int(0, std::int64_t(files.size()) - 1));
  const Mask src = load_mask(files[pick]);

  if (src.height() == h && src.width() == w) return src;
  if (src.height() >= h && src.width() >= w) {
    const int top = int(rng.uniform_int(0, src.height() - h));
    const int left = int(rng.uniform_int(0, src.width() - w));
    Mask m(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.at(y, x) = src.at(top + y, left + x);
    return m;
  }
  // nearest-neighbour resize keeps the mask binary
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sy = std::min(src.height() - 1, y * src.height() / h);
      const int sx = std::min(src.width() - 1, x * src.width() / w);
      m.at(y, x) = src.at(sy, sx);
    }
  return m;
}

}  // namespace

Mask irregular_mask(int h, int w, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != MaskKind::Irregular)
    throw ConfigError("irregular_mask: spec kind mismatch");
  if (spec.irregular_source == "procedural")
    return procedural_strokes(h, w, spec, rng);
  return corpus_mask(h, w, spec, rng);
}

Mask generate_mask(int h, int w, const MaskSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case MaskKind::Rectangular: return rectangular_mask(h, w, spec, rng);
    case MaskKind::SaltPepper: return salt_pepper_mask(h, w, spec, rng);
    case MaskKind::Irregular: return irregular_mask(h, w, spec, rng);
  }
  throw ConfigError("generate_mask: bad kind");
}

double mask_coverage(const Mask& mask) { return mask.coverage(); }

Image jigsaw_apply(const Image& img, int grid, const std::vector<int>& perm) {
  const int h = img.height(), w = img.width();
  if (grid < 1 || h % grid != 0 || w % grid != 0)
    throw ShapeError("jigsaw: image dims must be divisible by grid");
  if (int(perm.size()) != grid * grid)
    throw ShapeError("jigsaw: permutation size mismatch");
  const int th = h / grid, tw = w / grid;
  Image out = img;
  for (int t = 0; t < grid * grid; ++t) {
    const int src = perm[size_t(t)];
    const int dy = (t / grid) * th, dx = (t % grid) * tw;
    const int sy = (src / grid) * th, sx = (src % grid) * tw;
    for (int c = 0; c < img.channels(); ++c)
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x)
          out.at(c, dy + y, dx + x) = img.at(c, sy + y, sx + x);
  }
  return out;
}

std::pair<Image, std::vector<int>> jigsaw_shuffle(const Image& img, int grid,
                                                  Rng& rng) {
  const int tiles = grid * grid;
  std::vector<int> perm(static_cast<std::size_t>(tiles));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  return {jigsaw_apply(img, grid, perm), perm};
}

Image jigsaw_unshuffle(const Image& img, int grid, const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (size_t t = 0; t < perm.size(); ++t) inv[size_t(perm[t])] = int(t);
  return jigsaw_apply(img, grid, inv);
}

}  // namespace ep
