#include "edgepaint/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "edgepaint/cli/config.hpp"
#include "edgepaint/core/parallel.hpp"
#include "edgepaint/eval/eval.hpp"

namespace fs = std::filesystem;

namespace ep::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheckpoint = 5;

std::vector<std::string> list_pngs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .png images under " + dir);
  return out;
}

void require_fresh_dir(const std::string& dir) {
  if (fs::exists(dir) && !fs::is_empty(dir))
    throw DataError("refusing to overwrite non-empty directory: " + dir);
  fs::create_directories(dir);
}

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

int cmd_train(const TrainArgs& args) {
  const RunConfig cfg = RunConfig::load(args.config_path, args.overrides);
  if (cfg.data_dir.empty()) throw ConfigError("train requires data_dir");
  if (cfg.run_dir.empty()) throw ConfigError("train requires run_dir");
  set_num_threads(cfg.threads);

  // fail fast on a missing extractor asset
  try {
    make_extractor(cfg.extractor);
  } catch (const CheckpointError& e) {
    throw DataError(std::string("extractor weights unavailable: ") + e.what());
  }

  require_fresh_dir(cfg.run_dir);
  {
    std::ofstream out(cfg.run_dir + "/config.txt");
    out << cfg.serialize();
    out << "# config_hash = " << cfg.hash_hex() << "\n";
  }

  std::vector<std::string> sources = list_pngs(cfg.data_dir);

  // Split by source image before tiling so tiles never straddle splits.
  SplitManifest manifest =
      make_splits(sources, Rng::derive_seed(cfg.seed, "splits"));
  if (cfg.tile_sources) {
    fs::create_directories(cfg.run_dir + "/tiles");
    auto tile_split = [&](const std::vector<std::string>& part) {
      std::vector<std::string> out;
      for (const auto& src : part) {
        const Image img = load_image(src, Range::Unit);
        const auto tiles = tile_image(img, cfg.image_size);
        const std::string stem = fs::path(src).stem().string();
        for (size_t i = 0; i < tiles.size(); ++i) {
          const std::string path = cfg.run_dir + "/tiles/" + stem + "-t" +
                                   std::to_string(i) + ".png";
          save_image(tiles[i], path);
          out.push_back(path);
        }
      }
      return out;
    };
    manifest.train = tile_split(manifest.train);
    manifest.val = tile_split(manifest.val);
    manifest.test = tile_split(manifest.test);
  }
  save_manifest(manifest, cfg.run_dir + "/manifest.tsv");

  ExampleSource data(manifest.train, cfg.mask_spec(), cfg.canny_config(),
                     Rng::derive_seed(cfg.seed, "masks"), cfg.fixed_masks);
  InpaintModel model(cfg.model_config(), Rng::derive_seed(cfg.seed, "init"));

  const MetricsLog log =
      train_full(data, model, cfg.train_config(), cfg.run_dir);
  write_metrics_csv(log, cfg.run_dir + "/metrics.csv");
  fs::create_directories(cfg.run_dir + "/checkpoints");
  model.save(cfg.run_dir + "/checkpoints/final.ckpt");
  std::cout << "trained " << log.size() << " steps; run dir: " << cfg.run_dir
            << "\n";
  return kExitOk;
}

struct InferArgs {
  std::string checkpoint, image, out, mask_path, mask_spec, gt;
  std::uint64_t seed = 1;
  int threads = 0;
};

int cmd_infer(const InferArgs& args) {
  set_num_threads(args.threads);
  const InpaintModel model = InpaintModel::load(args.checkpoint);
  const Image img = load_image(args.image, Range::Unit);
  if (img.kind() != ImageKind::Rgb)
    throw DataError("infer expects an rgb image: " + args.image);

  Mask mask;
  if (!args.mask_path.empty()) {
    mask = load_mask(args.mask_path);
  } else if (!args.mask_spec.empty()) {
    Rng rng(args.seed);
    mask = generate_mask(img.height(), img.width(),
                         parse_mask_spec(args.mask_spec), rng);
  } else {
    throw ConfigError("infer needs --mask or --mask-spec");
  }

  const Image out = inpaint(img, mask, model);
  save_image(out, args.out);
  if (!args.gt.empty()) {
    const Image gt = load_image(args.gt, Range::Unit);
    std::cout << "PSNR: " << psnr(out, gt) << " dB\n";
  }
  std::cout << "wrote " << args.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, stub, data_dir, manifest, split = "test";
  std::string mask_spec_text = "rectangular:0.05:0.30";
  std::string out_dir;
  std::vector<std::string> extra_models;
  std::string sweep_grid;
  std::uint64_t seed = 1;
  int threads = 0;
};

int cmd_eval(const EvalArgs& args) {
  set_num_threads(args.threads);

  std::vector<std::string> paths;
  if (!args.manifest.empty()) {
    paths = load_manifest(args.manifest).part(args.split);
    if (paths.empty()) throw DataError("empty split: " + args.split);
  } else if (!args.data_dir.empty()) {
    paths = list_pngs(args.data_dir);
  } else {
    throw ConfigError("eval needs --manifest or --data");
  }

  std::vector<std::pair<std::string, Inpainter>> models;
  std::vector<std::shared_ptr<InpaintModel>> keep_alive;
  std::string config_hash;
  if (!args.stub.empty()) {
    if (args.stub == "ground_truth")
      models.emplace_back("ground_truth", ground_truth_stub());
    else if (args.stub == "zero_fill")
      models.emplace_back("zero_fill", zero_fill_stub());
    else
      throw ConfigError("unknown stub: " + args.stub);
  } else if (!args.checkpoint.empty()) {
    auto m = std::make_shared<InpaintModel>(InpaintModel::load(args.checkpoint));
    config_hash = m->config_hash();
    keep_alive.push_back(m);
    models.emplace_back(fs::path(args.checkpoint).stem().string(),
                        [m](const Image& img, const Mask& mask) {
                          return inpaint(img, mask, *m);
                        });
  } else {
    throw ConfigError("eval needs --checkpoint or --stub");
  }
  for (const auto& spec : args.extra_models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--extra-model wants label=path: " + spec);
    auto m = std::make_shared<InpaintModel>(
        InpaintModel::load(spec.substr(eq + 1)));
    keep_alive.push_back(m);
    models.emplace_back(spec.substr(0, eq),
                        [m](const Image& img, const Mask& mask) {
                          return inpaint(img, mask, *m);
                        });
  }

  require_fresh_dir(args.out_dir);
  const MaskSpec spec = parse_mask_spec(args.mask_spec_text);

  const EvalReport report = evaluate(models[0].second, paths, spec, args.seed,
                                     models[0].first, config_hash);
  write_report_csv(report, args.out_dir + "/metrics.csv");
  for (const auto& [kind, agg] : report.by_kind)
    std::cout << kind << ": mean " << agg.mean << " dB, std " << agg.stddev
              << " over " << agg.count << " images\n";

  if (!args.sweep_grid.empty()) {
    std::vector<double> grid;
    std::istringstream in(args.sweep_grid);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!tok.empty()) grid.push_back(std::stod(tok));
    const SweepResult sweep = ablation_sweep(SweepAxis::MaskPercentage, models,
                                             paths, spec, grid, args.seed);
    write_sweep_csv(sweep, args.out_dir + "/sweep-mask_percentage.csv");
    render_sweep_plot(sweep, args.out_dir + "/sweep-mask_percentage.png");
    std::cout << "sweep rows: " << sweep.points.size() << "\n";
  }
  return kExitOk;
}

struct MaskgenArgs {
  std::string spec_text = "rectangular:0.05:0.30";
  std::string out_dir;
  int count = 1;
  int height = 256, width = 256;
  std::uint64_t seed = 1;
};

int cmd_maskgen(const MaskgenArgs& args) {
  if (args.count < 1) throw ConfigError("count must be >= 1");
  const MaskSpec spec = parse_mask_spec(args.spec_text);
  require_fresh_dir(args.out_dir);
  Rng rng(args.seed);
  for (int i = 0; i < args.count; ++i) {
    const Mask m = generate_mask(args.height, args.width, spec, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "mask-%04d.png", i);
    save_mask(m, args.out_dir + "/" + name);
  }
  std::cout << "wrote " << args.count << " masks to " << args.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"edge-guided three-stage image inpainting"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the three-stage pipeline");
  train->add_option("--config", train_args.config_path, "run config file")
      ->required();
  train->add_option("--set", train_args.overrides, "key=value override");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "inpaint one image");
  infer->add_option("--checkpoint", infer_args.checkpoint)->required();
  infer->add_option("--image", infer_args.image)->required();
  infer->add_option("--out", infer_args.out)->required();
  infer->add_option("--mask", infer_args.mask_path, "mask raster (255=hole)");
  infer->add_option("--mask-spec", infer_args.mask_spec, "kind:min:max");
  infer->add_option("--seed", infer_args.seed);
  infer->add_option("--gt", infer_args.gt, "ground truth for PSNR");
  infer->add_option("--threads", infer_args.threads);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "PSNR evaluation / ablation sweep");
  eval->add_option("--checkpoint", eval_args.checkpoint);
  eval->add_option("--stub", eval_args.stub, "ground_truth | zero_fill");
  eval->add_option("--data", eval_args.data_dir);
  eval->add_option("--manifest", eval_args.manifest);
  eval->add_option("--split", eval_args.split);
  eval->add_option("--mask-spec", eval_args.mask_spec_text);
  eval->add_option("--out", eval_args.out_dir)->required();
  eval->add_option("--seed", eval_args.seed);
  eval->add_option("--sweep-grid", eval_args.sweep_grid, "e.g. 0.05,0.15,0.30");
  eval->add_option("--extra-model", eval_args.extra_models, "label=checkpoint");
  eval->add_option("--threads", eval_args.threads);

  MaskgenArgs mask_args;
  auto* maskgen = app.add_subcommand("maskgen", "generate mask rasters");
  maskgen->add_option("--spec", mask_args.spec_text);
  maskgen->add_option("--count", mask_args.count);
  maskgen->add_option("--height", mask_args.height);
  maskgen->add_option("--width", mask_args.width);
  maskgen->add_option("--seed", mask_args.seed);
  maskgen->add_option("--out", mask_args.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (maskgen->parsed()) return cmd_maskgen(mask_args);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace ep::cli
