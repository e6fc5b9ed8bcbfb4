#include "edgepaint/cli/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace ep {

namespace {

struct Field {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

template <class T>
T parse_number(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  T out;
  in >> out;
  if (in.fail() || !in.eof())
    throw ConfigError("bad value for " + key + ": " + v);
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    auto add_u64 = [&](const char* n, std::uint64_t RunConfig::* m) {
      v.push_back({n,
                   [m, n](RunConfig& c, const std::string& s) {
                     c.*m = parse_number<std::uint64_t>(s, n);
                   },
                   [m](const RunConfig& c) { return std::to_string(c.*m); }});
    };
    auto add_int = [&](const char* n, int RunConfig::* m) {
      v.push_back({n,
                   [m, n](RunConfig& c, const std::string& s) {
                     c.*m = parse_number<int>(s, n);
                   },
                   [m](const RunConfig& c) { return std::to_string(c.*m); }});
    };
    auto add_double = [&](const char* n, double RunConfig::* m) {
      v.push_back({n,
                   [m, n](RunConfig& c, const std::string& s) {
                     c.*m = parse_number<double>(s, n);
                   },
                   [m](const RunConfig& c) { return format_double(c.*m); }});
    };
    auto add_bool = [&](const char* n, bool RunConfig::* m) {
      v.push_back({n,
                   [m, n](RunConfig& c, const std::string& s) {
                     c.*m = parse_bool(s, n);
                   },
                   [m](const RunConfig& c) { return c.*m ? "true" : "false"; }});
    };
    auto add_string = [&](const char* n, std::string RunConfig::* m) {
      v.push_back({n, [m](RunConfig& c, const std::string& s) { c.*m = s; },
                   [m](const RunConfig& c) { return c.*m; }});
    };

    add_u64("seed", &RunConfig::seed);
    add_int("threads", &RunConfig::threads);
    add_string("data_dir", &RunConfig::data_dir);
    add_string("run_dir", &RunConfig::run_dir);
    add_int("image_size", &RunConfig::image_size);
    add_bool("tile_sources", &RunConfig::tile_sources);
    add_double("canny_sigma", &RunConfig::canny_sigma);
    add_double("canny_low", &RunConfig::canny_low);
    add_double("canny_high", &RunConfig::canny_high);
    add_string("mask_kind", &RunConfig::mask_kind);
    add_double("mask_min_frac", &RunConfig::mask_min_frac);
    add_double("mask_max_frac", &RunConfig::mask_max_frac);
    add_string("mask_source", &RunConfig::mask_source);
    add_int("gen_width", &RunConfig::gen_width);
    add_int("disc_width", &RunConfig::disc_width);
    add_int("res_blocks", &RunConfig::res_blocks);
    add_bool("cbam", &RunConfig::cbam);
    add_int("cbam_reduction", &RunConfig::cbam_reduction);
    add_double("lambda_l1", &RunConfig::lambda_l1);
    add_double("lambda_perc", &RunConfig::lambda_perc);
    add_double("lambda_style", &RunConfig::lambda_style);
    add_double("lambda_fm", &RunConfig::lambda_fm);
    add_string("extractor", &RunConfig::extractor);
    add_double("lr_g", &RunConfig::lr_g);
    add_double("lr_d", &RunConfig::lr_d);
    add_double("adam_beta1", &RunConfig::adam_beta1);
    add_double("adam_beta2", &RunConfig::adam_beta2);
    add_double("adam_eps", &RunConfig::adam_eps);
    add_int("batch_size", &RunConfig::batch_size);
    add_int("steps_per_stage", &RunConfig::steps_per_stage);
    add_bool("jigsaw", &RunConfig::jigsaw);
    add_int("jigsaw_grid", &RunConfig::jigsaw_grid);
    add_int("jigsaw_steps", &RunConfig::jigsaw_steps);
    add_bool("fixed_masks", &RunConfig::fixed_masks);
    add_int("checkpoint_every", &RunConfig::checkpoint_every);
    add_int("sample_every", &RunConfig::sample_every);
    return v;
  }();
  return f;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.name == key) {
      f.set(cfg, value);
      return;
    }
  throw ConfigError("unknown config key: " + key);
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text,
                               const std::vector<std::string>& overrides) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key = value: " + t);
    apply_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override is not key=value: " + o);
    apply_kv(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), overrides);
}

void RunConfig::validate() const {
  if (image_size < 8 || image_size % 8 != 0)
    throw ConfigError("image_size must be a positive multiple of 8");
  if (gen_width < 1 || disc_width < 1) throw ConfigError("widths must be >= 1");
  if (res_blocks < 1) throw ConfigError("res_blocks must be >= 1");
  if (cbam && (4 * gen_width) % cbam_reduction != 0)
    throw ConfigError("cbam_reduction must divide 4*gen_width");
  if (!(canny_low > 0.0) || !(canny_low < canny_high))
    throw ConfigError("canny thresholds require 0 < low < high");
  if (canny_sigma < 0.0) throw ConfigError("canny_sigma must be >= 0");
  mask_spec().validate();
  train_config().validate();
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.name << " = " << f.get(*this) << "\n";
  return out.str();
}

std::string RunConfig::hash_hex() const {
  const std::uint64_t h = fnv1a64(serialize());
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.image_size = image_size;
  m.gen_width = gen_width;
  m.disc_width = disc_width;
  m.res_blocks = res_blocks;
  m.cbam = cbam;
  m.cbam_reduction = cbam_reduction;
  m.canny = canny_config();
  m.lambda_l1 = lambda_l1;
  m.lambda_perc = lambda_perc;
  m.lambda_style = lambda_style;
  m.lambda_fm = lambda_fm;
  m.extractor = extractor;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lr_g = lr_g;
  t.lr_d = lr_d;
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_eps = adam_eps;
  t.batch_size = batch_size;
  t.steps_per_stage = steps_per_stage;
  t.seed = Rng::derive_seed(seed, "train");
  t.jigsaw = jigsaw;
  t.jigsaw_grid = jigsaw_grid;
  t.jigsaw_steps = jigsaw_steps;
  t.fixed_masks = fixed_masks;
  t.checkpoint_every = checkpoint_every;
  t.sample_every = sample_every;
  t.mask_spec = mask_spec();
  return t;
}

MaskSpec RunConfig::mask_spec() const {
  MaskSpec spec;
  spec.kind = mask_kind_from_name(mask_kind);
  switch (spec.kind) {
    case MaskKind::Rectangular: spec = MaskSpec::rectangular(); break;
    case MaskKind::SaltPepper: spec = MaskSpec::salt_pepper(); break;
    case MaskKind::Irregular: spec = MaskSpec::irregular(); break;
  }
  if (mask_min_frac >= 0.0) spec.min_frac = mask_min_frac;
  if (mask_max_frac >= 0.0) spec.max_frac = mask_max_frac;
  spec.irregular_source = mask_source;
  spec.seed = Rng::derive_seed(seed, "masks");
  return spec;
}

CannyConfig RunConfig::canny_config() const {
  return CannyConfig{canny_sigma, canny_low, canny_high};
}

}  // namespace ep
