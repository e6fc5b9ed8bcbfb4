#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "edgepaint/maskgen/maskgen.hpp"
#include "edgepaint/pipeline/pipeline.hpp"

namespace ep {

// Peak signal-to-noise ratio in dB, computed in unit range with peak 1.
// Identical images return the 100 dB cap.
double psnr(const Image& a, const Image& b);

struct EvalRow {
  std::string id;
  std::string mask_kind;
  double coverage = 0.0;
  double psnr_db = 0.0;
};

struct EvalAggregate {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, EvalAggregate> by_kind;
  std::string model_id;
  std::string config_hash;

  void recompute_aggregates();
};

// Anything that fills a masked image: the trained pipeline or a test stub.
using Inpainter = std::function<Image(const Image& rgb_unit, const Mask&)>;

Inpainter model_inpainter(const InpaintModel& model);
Inpainter ground_truth_stub();  // returns the input unchanged
Inpainter zero_fill_stub();     // leaves the masked region at zero

// For each image: draw the item's seed-fixed mask, inpaint, score vs truth.
EvalReport evaluate(const Inpainter& inpaint_fn,
                    const std::vector<std::string>& paths,
                    const MaskSpec& mask_spec, std::uint64_t seed,
                    const std::string& model_id = "",
                    const std::string& config_hash = "");

void write_report_csv(const EvalReport& report, const std::string& path);

enum class SweepAxis { MaskPercentage, LossSet, ComponentSet };
std::string sweep_axis_name(SweepAxis axis);

struct SweepPoint {
  std::string config_label;
  double grid_value = 0.0;
  double mean_psnr = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::MaskPercentage;
  std::vector<SweepPoint> points;  // one row per (config, grid point)
};

// Evaluates every labelled model at every grid coverage (a ±10% band around
// each grid value keeps integer-area masks feasible).
SweepResult ablation_sweep(
    SweepAxis axis,
    const std::vector<std::pair<std::string, Inpainter>>& models,
    const std::vector<std::string>& paths, const MaskSpec& base_spec,
    const std::vector<double>& grid, std::uint64_t seed);

void write_sweep_csv(const SweepResult& sweep, const std::string& path);
// Line plot, one series per config label.
void render_sweep_plot(const SweepResult& sweep, const std::string& path);

}  // namespace ep
