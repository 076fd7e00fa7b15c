#pragma once

// Multiply-accumulate accounting for one training forward pass. Only matmul
// work is counted; softmax, layernorm and GELU are ignored.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smaug/trainer/config.hpp"

namespace smaug::cost {

/// What a forward pass processes beyond the model configuration.
struct Workload {
  /// Token count of every caption in the batch, CLS included.
  std::size_t text_len = 12;
  std::size_t batch = 2;
  /// Run the pixel decoder. Off for configurations without masked modelling.
  bool reconstruction = true;
  /// Multi-frame runs: select kappa frames for fusion. Off means fusion
  /// attends to every sampled frame and the selector never runs.
  bool frame_selection = true;
};

/// Live token count entering each encoder layer, followed by the output length.
std::vector<std::size_t> encoder_token_counts(std::size_t num_patches, double mask_ratio, double keeping_rate,
                                              const std::vector<std::size_t>& sparsify_layers, std::size_t depth);

struct CostReport {
  std::vector<std::size_t> encoder_tokens;
  /// Visual tokens attended to by each fusion pass.
  std::size_t fusion_context = 0;
  /// MACs per module tag for the whole batch.
  std::map<std::string, std::uint64_t> macs;

  std::uint64_t total() const;
  std::uint64_t at(const std::string& tag) const;
};

/// MACs of one pre-norm transformer block over n tokens.
std::uint64_t block_macs(std::uint64_t n, std::uint64_t d, std::uint64_t hidden);

CostReport analytic_cost(const trainer::TrainConfig& cfg, const Workload& w);

/// Runs one forward pass of the real model on `w.batch` synthetic pairs whose
/// captions have `w.text_len` tokens and counts matmul MACs per module.
/// Requires reconstruction on and, for multi-frame configs, frame selection on.
CostReport instrumented_cost(const trainer::TrainConfig& cfg, const Workload& w);

/// The configuration with masking, token sparsification and frame selection removed.
struct Variant {
  std::string name;
  trainer::TrainConfig cfg;
  Workload workload;
};

Variant baseline_of(const trainer::TrainConfig& cfg, const Workload& w);

/// Four-frame ViT-B scale model with the default pre-training components.
trainer::TrainConfig vit_b_config();
Workload vit_b_workload();

/// Component ablation ladder: none, +MAE, +MAE+VTS, +MAE+VTS+FS.
std::vector<Variant> component_ladder(const trainer::TrainConfig& full, const Workload& w);

}  // namespace smaug::cost
