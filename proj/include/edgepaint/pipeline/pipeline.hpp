#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgepaint/dataset/dataset.hpp"
#include "edgepaint/losses/losses.hpp"
#include "edgepaint/nets/networks.hpp"
#include "edgepaint/nets/optim.hpp"

namespace ep {

// Everything that determines the model's identity: architecture widths,
// canny parameters, loss weights and the extractor. Hashed into checkpoints.
struct ModelConfig {
  int image_size = 256;
  int gen_width = 64;
  int disc_width = 64;
  int res_blocks = 8;
  bool cbam = true;
  int cbam_reduction = 8;
  CannyConfig canny;
  double lambda_l1 = 1.0;
  double lambda_perc = 1.0;
  double lambda_style = 1.0;
  double lambda_fm = 1.0;
  std::string extractor = "tiny_random";

  GeneratorDescriptor g1_desc() const;
  GeneratorDescriptor g2_desc() const;
  GeneratorDescriptor g3_desc() const;
  DiscriminatorDescriptor d1_desc() const;
  DiscriminatorDescriptor d2_desc() const;
  DiscriminatorDescriptor d3_desc() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  std::string hash_hex() const;
};

enum class Stage { Edge, Colour, Global };
std::string stage_name(Stage s);

// The three stacked GANs: edge completion, colour filling, global refinement.
class InpaintModel {
 public:
  InpaintModel(ModelConfig cfg, std::uint64_t seed);

  InpaintModel(const InpaintModel&) = delete;
  InpaintModel& operator=(const InpaintModel&) = delete;
  InpaintModel(InpaintModel&&) = default;

  void save(const std::string& path) const;
  static InpaintModel load(const std::string& path);

  const ModelConfig& config() const { return cfg_; }
  std::string config_hash() const { return cfg_.hash_hex(); }

  Generator& g1() { return g1_; }
  Generator& g2() { return g2_; }
  Generator& g3() { return g3_; }
  Discriminator& d1() { return d1_; }
  Discriminator& d2() { return d2_; }
  Discriminator& d3() { return d3_; }
  const Generator& g1() const { return g1_; }
  const Generator& g2() const { return g2_; }
  const Generator& g3() const { return g3_; }

 private:
  ModelConfig cfg_;
  Generator g1_, g2_, g3_;
  Discriminator d1_, d2_, d3_;
};

struct TrainConfig {
  double lr_g = 1e-3;
  double lr_d = 1e-4;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;
  int batch_size = 2;
  int steps_per_stage = 0;
  std::uint64_t seed = 1;
  bool jigsaw = false;
  int jigsaw_grid = 4;
  int jigsaw_steps = 0;  // 0 -> steps_per_stage / 10
  bool fixed_masks = false;
  // Condition colour/global stages on ground-truth edges (stage unit tests).
  bool teacher_forcing = false;
  int checkpoint_every = 0;  // 0 = only at stage end
  int sample_every = 0;      // 0 = off
  MaskSpec mask_spec = MaskSpec::rectangular();

  void validate() const;
};

struct MetricsRow {
  int step = 0;
  std::string stage;
  LossBundle bundle;
};
using MetricsLog = std::vector<MetricsRow>;

void write_metrics_csv(const MetricsLog& log, const std::string& path);

// Loads base examples once and draws masks per (item, epoch) — or once per
// item when fixed_masks is set, matching the evaluation-time mask stream.
class ExampleSource {
 public:
  ExampleSource(std::vector<std::string> paths, MaskSpec mask_spec,
                CannyConfig canny, std::uint64_t mask_seed, bool fixed_masks);

  size_t size() const { return paths_.size(); }
  const std::vector<std::string>& paths() const { return paths_; }
  TrainingExample get(const std::string& path, int epoch) const;

 private:
  struct BaseExample {
    std::string id;
    Image i_gt, i_gray, c_gt;
  };
  const BaseExample& base(const std::string& path) const;

  std::vector<std::string> paths_;
  MaskSpec mask_spec_;
  CannyConfig canny_;
  std::uint64_t mask_seed_;
  bool fixed_masks_;
  mutable std::unordered_map<std::string, BaseExample> cache_;
};

// ---- single-example stage ops ----
// Masked gray + masked edges + mask -> soft edge map in (0,1).
Image predict_edges(const TrainingExample& ex, const Generator& g1);
// Threshold the prediction at 0.5 and splice it into the unmasked truth.
Image compose_edges(const Image& c_pred_soft, const Image& c_gt,
                    const Mask& mask);
// Masked rgb conditioned on composed edges -> rgb in tanh range (signed).
Image fill_color(const TrainingExample& ex, const Image& c_comp,
                 const Generator& g2);
// (composite, masked rgb) -> refined rgb (signed).
Image refine(const Image& i_comp_signed, const Image& i_gt_masked_signed,
             const Generator& g3);

struct InpaintResult {
  Image final_rgb;   // unit range; unmasked pixels bit-equal to the input
  Image colour_rgb;  // colour-stage output after composition (unit range)
  Image edge_map;    // composed binary edge conditioning
};

InpaintResult inpaint_detailed(const Image& rgb_unit, const Mask& mask,
                               const InpaintModel& model);
Image inpaint(const Image& rgb_unit, const Mask& mask,
              const InpaintModel& model);

// Alternating one-discriminator/one-generator Adam updates; upstream stages
// run frozen. Appends one row per step to the log. `run_dir` empty = no
// artifacts written.
MetricsLog train_stage(Stage stage, const ExampleSource& data,
                       InpaintModel& model, const TrainConfig& cfg,
                       const std::string& run_dir = "");

// edge -> colour -> global.
MetricsLog train_full(const ExampleSource& data, InpaintModel& model,
                      const TrainConfig& cfg, const std::string& run_dir = "");

}  // namespace ep
