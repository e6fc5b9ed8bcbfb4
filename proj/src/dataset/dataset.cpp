#include "edgepaint/dataset/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "edgepaint/core/errors.hpp"

namespace ep {

std::vector<std::string> SplitManifest::all() const {
  std::vector<std::string> out = train;
  out.insert(out.end(), val.begin(), val.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

const std::vector<std::string>& SplitManifest::part(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split part: " + name);
}

std::vector<Image> tile_image(const Image& img, int tile) {
  if (tile < 1 || img.height() % tile != 0 || img.width() % tile != 0)
    throw ShapeError("tile_image: " + std::to_string(img.height()) + "x" +
                     std::to_string(img.width()) + " not divisible by tile " +
                     std::to_string(tile));
  std::vector<Image> out;
  out.reserve(size_t(img.height() / tile) * size_t(img.width() / tile));
  for (int ty = 0; ty < img.height(); ty += tile)
    for (int tx = 0; tx < img.width(); tx += tile) {
      Image t(tile, tile, img.kind(), img.range());
      for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < tile; ++y)
          for (int x = 0; x < tile; ++x)
            t.at(c, y, x) = img.at(c, ty + y, tx + x);
      out.push_back(std::move(t));
    }
  return out;
}

SplitManifest make_splits(std::vector<std::string> paths, std::uint64_t seed) {
  const size_t n = paths.size();
  if (n < 5)
    throw DataError("make_splits: need at least 5 items, got " +
                    std::to_string(n));
  Rng rng(seed);
  rng.shuffle(paths);
  const size_t n_train = size_t(0.6 * double(n));
  const size_t n_val = size_t(0.2 * double(n));
  SplitManifest m;
  m.seed = seed;
  m.train.assign(paths.begin(), paths.begin() + n_train);
  m.val.assign(paths.begin() + n_train, paths.begin() + n_train + n_val);
  m.test.assign(paths.begin() + n_train + n_val, paths.end());
  return m;
}

void save_manifest(const SplitManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << "# seed\t" << m.seed << "\n";
  for (const auto& p : m.train) out << "train\t" << p << "\n";
  for (const auto& p : m.val) out << "val\t" << p << "\n";
  for (const auto& p : m.test) out << "test\t" << p << "\n";
}

SplitManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path);
  SplitManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("manifest line without tab: " + line);
    const std::string key = line.substr(0, tab);
    const std::string val = line.substr(tab + 1);
    if (key == "# seed") {
      m.seed = std::stoull(val);
    } else if (key == "train") {
      m.train.push_back(val);
    } else if (key == "val") {
      m.val.push_back(val);
    } else if (key == "test") {
      m.test.push_back(val);
    } else {
      throw FormatError("manifest line with unknown split: " + line);
    }
  }
  return m;
}

TrainingExample make_example(const std::string& path, const MaskSpec& mask_spec,
                             const CannyConfig& canny, Rng& rng) {
  Image img = load_image(path, Range::Unit);
  if (img.kind() == ImageKind::Gray) {
    Image rgb(img.height(), img.width(), ImageKind::Rgb, Range::Unit);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rgb.at(c, y, x) = img.at(0, y, x);
    img = std::move(rgb);
  }
  TrainingExample ex;
  ex.id = std::filesystem::path(path).stem().string();
  ex.i_gt = std::move(img);
  ex.i_gray = to_grayscale(ex.i_gt);
  ex.c_gt = canny_edges(ex.i_gray, canny);
  ex.mask = generate_mask(ex.i_gt.height(), ex.i_gt.width(), mask_spec, rng);
  return ex;
}

void validate_example(const TrainingExample& ex, const CannyConfig& canny) {
  if (!ex.i_gt.same_geometry(ex.i_gt) || ex.i_gray.height() != ex.i_gt.height() ||
      ex.i_gray.width() != ex.i_gt.width() ||
      ex.c_gt.height() != ex.i_gt.height() ||
      ex.c_gt.width() != ex.i_gt.width() ||
      ex.mask.height() != ex.i_gt.height() ||
      ex.mask.width() != ex.i_gt.width())
    throw DataError("example members disagree on geometry: " + ex.id);
  const Image gray = to_grayscale(ex.i_gt);
  for (size_t i = 0; i < gray.size(); ++i)
    if (gray.values()[i] != ex.i_gray.values()[i])
      throw DataError("i_gray is not the grayscale of i_gt: " + ex.id);
  const Image edges = canny_edges(gray, canny);
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges.values()[i] != ex.c_gt.values()[i])
      throw DataError("c_gt is not the canny map of i_gray: " + ex.id);
}

Rng rng_for_item(std::uint64_t seed, const std::string& id) {
  return Rng(Rng::derive_seed(seed, id));
}

BatchIterator::BatchIterator(std::vector<std::string> items, int batch_size,
                             std::uint64_t seed)
    : items_(std::move(items)), batch_size_(batch_size), seed_(seed) {
  if (batch_size_ < 1) throw ConfigError("batch_size must be >= 1");
  if (items_.empty()) throw DataError("batch_iterator: empty split");
}

std::vector<std::vector<std::string>> BatchIterator::epoch_batches(
    int epoch) const {
  std::vector<std::string> order = items_;
  Rng rng(Rng::derive_seed(seed_, "epoch-" + std::to_string(epoch)));
  rng.shuffle(order);
  std::vector<std::vector<std::string>> batches;
  for (size_t i = 0; i < order.size(); i += size_t(batch_size_)) {
    const size_t end = std::min(order.size(), i + size_t(batch_size_));
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  return batches;
}

int BatchIterator::batches_per_epoch() const {
  return int((items_.size() + size_t(batch_size_) - 1) / size_t(batch_size_));
}

}  // namespace ep
