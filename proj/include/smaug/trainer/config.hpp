#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smaug/vidio/corpus.hpp"

namespace smaug::trainer {

/// Every tunable of a run. Serialised as flat "key=value" lines.
struct TrainConfig {
  // Run.
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double base_lr = 1e-4;
  double min_lr = 1e-6;
  double weight_decay = 0.02;
  double warmup_epochs = 1.0;

  // Data and clip geometry.
  std::size_t n_pairs = 320;
  std::size_t n_train = 256;
  std::size_t n_concepts = 14;
  double distractor_frac = 0.0;
  std::size_t frames = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 3;
  std::size_t patch_size = 8;

  // Sampling and sparsity.
  std::size_t frames_per_clip = 1;
  std::size_t kappa = 2;
  double mask_ratio = 0.5;
  bool allow_high_mask_ratio = false;
  double keeping_rate = 0.8;
  std::vector<std::size_t> sparsify_layers{3};

  // Widths and depths.
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t depth = 4;
  std::size_t temporal_depth = 1;
  std::size_t decoder_depth = 3;
  std::size_t decoder_dim = 64;
  bool normalize_pixel_targets = false;
  std::size_t text_depth = 2;
  std::size_t fusion_depth = 3;
  std::size_t selector_blocks = 2;
  std::size_t selector_heads = 2;
  std::size_t selector_hidden = 256;
  double gumbel_tau = 1.0;
  std::size_t vtc_dim = 64;
  double temperature = 0.07;
  double mlm_ratio = 0.15;
  bool mlm_min_one = true;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
  vidio::Geometry geometry() const;
  /// Generator options for the whole corpus; the first n_train pairs train.
  vidio::CorpusOptions corpus_options() const;
};

/// Known configuration keys in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form; unknown keys and malformed values throw.
void set_key(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const TrainConfig& cfg, const std::string& key);

/// "key=value" lines, one per key, canonical order.
std::string to_text(const TrainConfig& cfg);
/// Parses key=value lines; blank lines and '#' comments are skipped.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace smaug::trainer
