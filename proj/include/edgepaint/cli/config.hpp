#pragma once

#include <string>
#include <vector>

#include "edgepaint/pipeline/pipeline.hpp"

namespace ep {

// Full declarative surface of a run. Parsed from a flat `key = value` file
// with `--set key=value` overrides; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;

  std::string data_dir;
  std::string run_dir;
  int image_size = 256;
  bool tile_sources = false;

  double canny_sigma = 2.0;
  double canny_low = 0.1;
  double canny_high = 0.2;

  std::string mask_kind = "rectangular";
  double mask_min_frac = -1.0;  // -1 = kind default
  double mask_max_frac = -1.0;
  std::string mask_source = "procedural";

  int gen_width = 64;
  int disc_width = 64;
  int res_blocks = 8;
  bool cbam = true;
  int cbam_reduction = 8;

  double lambda_l1 = 1.0;
  double lambda_perc = 1.0;
  double lambda_style = 1.0;
  double lambda_fm = 1.0;
  std::string extractor = "tiny_random";

  double lr_g = 1e-3;
  double lr_d = 1e-4;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;
  int batch_size = 2;
  int steps_per_stage = 0;
  bool jigsaw = false;
  int jigsaw_grid = 4;
  int jigsaw_steps = 0;
  bool fixed_masks = false;
  int checkpoint_every = 0;
  int sample_every = 0;

  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
  static RunConfig from_text(const std::string& text,
                             const std::vector<std::string>& overrides = {});

  void validate() const;
  std::string serialize() const;  // canonical form; input to the hash
  std::string hash_hex() const;

  ModelConfig model_config() const;
  TrainConfig train_config() const;
  MaskSpec mask_spec() const;
  CannyConfig canny_config() const;
};

}  // namespace ep
