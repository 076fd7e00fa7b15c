#include "smaug/trainer/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace smaug::trainer {

namespace {

struct Field {
  std::string key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "' as " + what);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

template <class T>
Field size_field(std::string key, T TrainConfig::*m) {
  return {key, [key, m](TrainConfig& c, const std::string& v) { c.*m = static_cast<T>(parse_u64(key, v)); },
          [m](const TrainConfig& c) { return std::to_string(c.*m); }};
}

Field double_field(std::string key, double TrainConfig::*m) {
  return {key, [key, m](TrainConfig& c, const std::string& v) { c.*m = parse_f64(key, v); },
          [m](const TrainConfig& c) { return format_double(c.*m); }};
}

Field bool_field(std::string key, bool TrainConfig::*m) {
  return {key, [key, m](TrainConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
          [m](const TrainConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

Field list_field(std::string key, std::vector<std::size_t> TrainConfig::*m) {
  return {key,
          [key, m](TrainConfig& c, const std::string& v) {
            std::vector<std::size_t> out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
              if (!item.empty()) out.push_back(parse_u64(key, item));
            }
            c.*m = out;
          },
          [m](const TrainConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < (c.*m).size(); ++i) s += (i ? "," : "") + std::to_string((c.*m)[i]);
            return s;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      size_field("seed", &TrainConfig::seed),
      size_field("epochs", &TrainConfig::epochs),
      size_field("batch_size", &TrainConfig::batch_size),
      double_field("base_lr", &TrainConfig::base_lr),
      double_field("min_lr", &TrainConfig::min_lr),
      double_field("weight_decay", &TrainConfig::weight_decay),
      double_field("warmup_epochs", &TrainConfig::warmup_epochs),
      size_field("n_pairs", &TrainConfig::n_pairs),
      size_field("n_train", &TrainConfig::n_train),
      size_field("n_concepts", &TrainConfig::n_concepts),
      double_field("distractor_frac", &TrainConfig::distractor_frac),
      size_field("frames", &TrainConfig::frames),
      size_field("height", &TrainConfig::height),
      size_field("width", &TrainConfig::width),
      size_field("channels", &TrainConfig::channels),
      size_field("patch_size", &TrainConfig::patch_size),
      size_field("frames_per_clip", &TrainConfig::frames_per_clip),
      size_field("kappa", &TrainConfig::kappa),
      double_field("mask_ratio", &TrainConfig::mask_ratio),
      bool_field("allow_high_mask_ratio", &TrainConfig::allow_high_mask_ratio),
      double_field("keeping_rate", &TrainConfig::keeping_rate),
      list_field("sparsify_layers", &TrainConfig::sparsify_layers),
      size_field("dim", &TrainConfig::dim),
      size_field("heads", &TrainConfig::heads),
      size_field("mlp_ratio", &TrainConfig::mlp_ratio),
      size_field("depth", &TrainConfig::depth),
      size_field("temporal_depth", &TrainConfig::temporal_depth),
      size_field("decoder_depth", &TrainConfig::decoder_depth),
      size_field("decoder_dim", &TrainConfig::decoder_dim),
      bool_field("normalize_pixel_targets", &TrainConfig::normalize_pixel_targets),
      size_field("text_depth", &TrainConfig::text_depth),
      size_field("fusion_depth", &TrainConfig::fusion_depth),
      size_field("selector_blocks", &TrainConfig::selector_blocks),
      size_field("selector_heads", &TrainConfig::selector_heads),
      size_field("selector_hidden", &TrainConfig::selector_hidden),
      double_field("gumbel_tau", &TrainConfig::gumbel_tau),
      size_field("vtc_dim", &TrainConfig::vtc_dim),
      double_field("temperature", &TrainConfig::temperature),
      double_field("mlm_ratio", &TrainConfig::mlm_ratio),
      bool_field("mlm_min_one", &TrainConfig::mlm_min_one),
  };
  return f;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw std::invalid_argument("config key '" + key + "': " + why);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_key(TrainConfig& cfg, const std::string& key, const std::string& value) { field(key).set(cfg, value); }

std::string get_key(const TrainConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::string to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(cfg) + "\n";
  return out;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

void TrainConfig::validate() const {
  require(batch_size >= 1, "batch_size", "must be at least 1");
  require(base_lr > 0.0, "base_lr", "must be positive");
  require(min_lr >= 0.0 && min_lr <= base_lr, "min_lr", "must lie in [0, base_lr]");
  require(weight_decay >= 0.0, "weight_decay", "must be non-negative");
  require(warmup_epochs >= 0.0 && (epochs == 0 || warmup_epochs < static_cast<double>(epochs)), "warmup_epochs",
          "must be below epochs");
  require(n_train >= 1 && n_train <= n_pairs, "n_train", "must lie in [1, n_pairs]");
  require(distractor_frac >= 0.0 && distractor_frac <= 1.0, "distractor_frac", "must lie in [0, 1]");
  require(frames >= 1, "frames", "must be at least 1");
  require(frames_per_clip >= 1 && frames_per_clip <= frames, "frames_per_clip", "must lie in [1, frames]");
  require(frames_per_clip == 1 || (kappa >= 1 && kappa < frames_per_clip), "kappa", "must satisfy 1 <= kappa < frames_per_clip");
  require(mask_ratio >= 0.0 && mask_ratio <= 1.0, "mask_ratio", "must lie in [0, 1]");
  require(mask_ratio <= 0.65 || allow_high_mask_ratio, "mask_ratio",
          "exceeds 0.65; set allow_high_mask_ratio=true to override");
  require(keeping_rate > 0.0 && keeping_rate <= 1.0, "keeping_rate", "must lie in (0, 1]");
  for (auto l : sparsify_layers) require(l >= 1 && l <= depth, "sparsify_layers", "entries must lie in [1, depth]");
  require(dim > 0 && heads > 0 && dim % heads == 0, "heads", "must divide dim");
  require(decoder_dim % heads == 0 && decoder_dim > 0, "decoder_dim", "must be divisible by heads");
  require(dim % selector_heads == 0, "selector_heads", "must divide dim");
  require(depth >= 1, "depth", "must be at least 1");
  require(decoder_depth >= 1, "decoder_depth", "must be at least 1");
  require(gumbel_tau > 0.0, "gumbel_tau", "must be positive");
  require(temperature > 0.0, "temperature", "must be positive");
  require(mlm_ratio >= 0.0 && mlm_ratio <= 1.0, "mlm_ratio", "must lie in [0, 1]");
  require(patch_size > 0 && height % patch_size == 0 && width % patch_size == 0, "patch_size",
          "must divide height and width");
}

vidio::Geometry TrainConfig::geometry() const {
  vidio::Geometry g;
  g.frames = frames;
  g.height = height;
  g.width = width;
  g.channels = channels;
  g.patch = patch_size;
  return g;
}

vidio::CorpusOptions TrainConfig::corpus_options() const {
  vidio::CorpusOptions o;
  o.seed = seed;
  o.n_pairs = n_pairs;
  o.n_concepts = n_concepts;
  o.geometry = geometry();
  o.distractor_frac = distractor_frac;
  return o;
}

}  // namespace smaug::trainer
