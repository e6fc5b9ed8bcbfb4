#pragma once

#include <string>
#include <vector>

#include "edgepaint/imaging/canny.hpp"
#include "edgepaint/imaging/image.hpp"
#include "edgepaint/maskgen/maskgen.hpp"

namespace ep {

// One training sample: ground truth, derived grayscale/edges, and a mask.
// All members share H×W; i_gray and c_gt are recomputable from i_gt.
struct TrainingExample {
  std::string id;
  Image i_gt;    // rgb, unit range
  Image i_gray;  // gray, unit range
  Image c_gt;    // edge, {0,1}
  Mask mask;
};

struct SplitManifest {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;

  std::vector<std::string> all() const;
  const std::vector<std::string>& part(const std::string& name) const;
};

// Non-overlapping row-major tiles; H and W must divide by `tile`.
std::vector<Image> tile_image(const Image& img, int tile);

// Deterministic shuffle then floor(0.6n)/floor(0.2n)/remainder split.
SplitManifest make_splits(std::vector<std::string> paths, std::uint64_t seed);

void save_manifest(const SplitManifest& m, const std::string& path);
SplitManifest load_manifest(const std::string& path);

// Loads the image, derives grayscale + canny edges, draws a fresh mask.
// Grayscale source files are promoted to rgb by channel replication.
TrainingExample make_example(const std::string& path, const MaskSpec& mask_spec,
                             const CannyConfig& canny, Rng& rng);

// Recomputes the derived members and throws DataError on any mismatch.
void validate_example(const TrainingExample& ex, const CannyConfig& canny);

// Deterministic per-item stream: one child generator per (seed, id), used to
// fix val/test masks independently of evaluation order.
Rng rng_for_item(std::uint64_t seed, const std::string& id);

// Epoch-addressable batching. Every epoch covers each item exactly once,
// with a deterministic order per (epoch, seed); the final batch may be short.
class BatchIterator {
 public:
  BatchIterator(std::vector<std::string> items, int batch_size,
                std::uint64_t seed);

  std::vector<std::vector<std::string>> epoch_batches(int epoch) const;
  int batches_per_epoch() const;
  int batch_size() const { return batch_size_; }

 private:
  std::vector<std::string> items_;
  int batch_size_;
  std::uint64_t seed_;
};

}  // namespace ep
