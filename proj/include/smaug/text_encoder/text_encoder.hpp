#pragma once

#include <span>
#include <string>
#include <vector>

#include "smaug/nn/layers.hpp"
#include "smaug/vidio/vocab.hpp"

namespace smaug::text {

using diff::Tensor;

inline constexpr double kMlmRatio = 0.15;

struct TextConfig {
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t mlp_ratio = 4;
  std::size_t vocab_size = 0;
  std::size_t max_len = 16;
};

/// Token embedding + learned positions + pre-norm blocks + final layernorm.
class TextEncoder {
 public:
  explicit TextEncoder(TextConfig cfg, std::string name = "text");

  const TextConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, Rng& rng) const;
  /// [len, d]; the CLS feature is row 0.
  Tensor operator()(nn::Binding& b, std::span<const std::uint32_t> ids) const;
  Tensor operator()(nn::Binding& b, const vidio::Caption& c) const { return (*this)(b, c.token_ids); }

 private:
  TextConfig cfg_;
  std::string name_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
};

struct MlmBatch {
  std::vector<std::uint32_t> corrupted;
  /// Masked positions, ascending; never 0 (CLS).
  std::vector<std::size_t> positions;
  std::vector<std::uint32_t> targets;
};

/// round(ratio * maskable) positions, replaced by the MASK id. With
/// `min_one` at least one token is masked.
MlmBatch mlm_corrupt(const vidio::Caption& caption, Rng& rng, double ratio = kMlmRatio, bool min_one = false);

/// Original ids recovered from a corruption record.
std::vector<std::uint32_t> mlm_restore(const MlmBatch& batch);

}  // namespace smaug::text
