#include "edgepaint/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "edgepaint/eval/plot.hpp"

namespace ep {

double psnr(const Image& a, const Image& b) {
  if (!a.same_geometry(b)) throw ShapeError("psnr: geometry mismatch");
  if (a.range() != b.range()) throw ShapeError("psnr: range tag mismatch");
  const Image ua = a.range() == Range::Unit ? a : a.to_range(Range::Unit);
  const Image ub = b.range() == Range::Unit ? b : b.to_range(Range::Unit);
  double mse = 0.0;
  for (size_t i = 0; i < ua.size(); ++i) {
    const double d = ua.values()[i] - ub.values()[i];
    mse += d * d;
  }
  mse /= double(ua.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

void EvalReport::recompute_aggregates() {
  by_kind.clear();
  std::map<std::string, std::vector<double>> grouped;
  for (const auto& r : rows) grouped[r.mask_kind].push_back(r.psnr_db);
  for (const auto& [kind, vals] : grouped) {
    EvalAggregate agg;
    agg.count = int(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    agg.mean = sum / double(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - agg.mean) * (v - agg.mean);
    agg.stddev = vals.size() > 1 ? std::sqrt(var / double(vals.size() - 1)) : 0.0;
    by_kind[kind] = agg;
  }
}

Inpainter model_inpainter(const InpaintModel& model) {
  return [&model](const Image& img, const Mask& mask) {
    return inpaint(img, mask, model);
  };
}

Inpainter ground_truth_stub() {
  return [](const Image& img, const Mask&) { return img; };
}

Inpainter zero_fill_stub() {
  return [](const Image& img, const Mask& mask) {
    return apply_mask(img, mask);
  };
}

EvalReport evaluate(const Inpainter& inpaint_fn,
                    const std::vector<std::string>& paths,
                    const MaskSpec& mask_spec, std::uint64_t seed,
                    const std::string& model_id,
                    const std::string& config_hash) {
  if (paths.empty()) throw DataError("evaluate: empty split");
  EvalReport report;
  report.model_id = model_id;
  report.config_hash = config_hash;
  for (const auto& path : paths) {
    const std::string id = std::filesystem::path(path).stem().string();
    Image img = load_image(path, Range::Unit);
    if (img.kind() == ImageKind::Gray) {
      Image rgb(img.height(), img.width(), ImageKind::Rgb, Range::Unit);
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height(); ++y)
          for (int x = 0; x < img.width(); ++x) rgb.at(c, y, x) = img.at(0, y, x);
      img = std::move(rgb);
    }
    Rng rng = rng_for_item(seed, id);
    const Mask mask = generate_mask(img.height(), img.width(), mask_spec, rng);
    const Image out = inpaint_fn(img, mask);
    EvalRow row;
    row.id = id;
    row.mask_kind = mask_kind_name(mask_spec.kind);
    row.coverage = mask_coverage(mask);
    row.psnr_db = psnr(out, img);
    report.rows.push_back(std::move(row));
  }
  report.recompute_aggregates();
  return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << "id,mask_kind,coverage,psnr_db\n";
  out << std::setprecision(17);
  for (const auto& r : report.rows)
    out << r.id << ',' << r.mask_kind << ',' << r.coverage << ',' << r.psnr_db
        << '\n';
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::MaskPercentage: return "mask_percentage";
    case SweepAxis::LossSet: return "loss_set";
    case SweepAxis::ComponentSet: return "component_set";
  }
  return "?";
}

SweepResult ablation_sweep(
    SweepAxis axis, const std::vector<std::pair<std::string, Inpainter>>& models,
    const std::vector<std::string>& paths, const MaskSpec& base_spec,
    const std::vector<double>& grid, std::uint64_t seed) {
  if (models.empty()) throw ConfigError("ablation_sweep: no models");
  if (grid.empty()) throw ConfigError("ablation_sweep: empty grid");
  SweepResult sweep;
  sweep.axis = axis;
  for (const auto& [label, fn] : models) {
    for (double g : grid) {
      MaskSpec spec = base_spec;
      spec.min_frac = std::max(0.0, g * 0.9);
      spec.max_frac = std::min(1.0, g * 1.1);
      const EvalReport r = evaluate(fn, paths, spec, seed, label);
      double mean = 0.0;
      for (const auto& row : r.rows) mean += row.psnr_db;
      mean /= double(r.rows.size());
      sweep.points.push_back({label, g, mean});
    }
  }
  return sweep;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sweep csv: " + path);
  out << "config," << sweep_axis_name(sweep.axis) << ",mean_psnr_db\n";
  out << std::setprecision(17);
  for (const auto& p : sweep.points)
    out << p.config_label << ',' << p.grid_value << ',' << p.mean_psnr << '\n';
}

void render_sweep_plot(const SweepResult& sweep, const std::string& path) {
  std::vector<PlotSeries> series;
  for (const auto& p : sweep.points) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const PlotSeries& s) { return s.label == p.config_label; });
    if (it == series.end()) {
      series.push_back({p.config_label, {}});
      it = series.end() - 1;
    }
    it->points.push_back({p.grid_value, p.mean_psnr});
  }
  render_line_plot(series, sweep_axis_name(sweep.axis), "PSNR DB", path);
}

}  // namespace ep
