#pragma once

#include <span>
#include <string>
#include <vector>

#include "smaug/nn/layers.hpp"

namespace smaug::fusion {

using diff::Tensor;

struct FusionConfig {
  std::size_t depth = 3;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t mlp_ratio = 4;
  std::size_t vocab_size = 0;
};

struct FusionOutput {
  /// Text-side sequence after fusion [P + 1, d].
  Tensor sequence;
  /// Row 0 of `sequence`.
  Tensor cls;
  /// [1, 2]; class 1 means match.
  Tensor vtm_logits;
  /// [masked positions, V]; undefined when no positions were requested.
  Tensor mlm_logits;
};

/// Cross-attention fusion: text queries attend to visual keys/values.
class FusionEncoder {
 public:
  explicit FusionEncoder(FusionConfig cfg, std::string name = "fusion");

  const FusionConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, Rng& rng) const;

  FusionOutput operator()(nn::Binding& b, const Tensor& text, const Tensor& visual,
                          std::span<const std::size_t> mlm_positions = {}) const;
  /// Fused CLS rows [B, d] -> [B, 2].
  Tensor vtm_forward(nn::Binding& b, const Tensor& fused_cls) const;
  /// Fused token states [m, d] -> vocabulary logits [m, V].
  Tensor mlm_forward(nn::Binding& b, const Tensor& states) const;

 private:
  FusionConfig cfg_;
  std::string name_;
  std::vector<nn::CrossAttentionBlock> blocks_;
  nn::LayerNorm norm_;
  nn::Linear vtm_head_;
  nn::LayerNorm mlm_norm_;
  nn::Linear mlm_head_;
};

}  // namespace smaug::fusion
