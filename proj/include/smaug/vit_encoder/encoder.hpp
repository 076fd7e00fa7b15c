#pragma once

#include <string>
#include <vector>

#include "smaug/nn/layers.hpp"
#include "smaug/patchmask/patchmask.hpp"
#include "smaug/vit_encoder/sparsify.hpp"

namespace smaug::vit {

struct EncoderConfig {
  std::size_t depth = 4;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t mlp_ratio = 4;
  /// 1-based layers followed by a sparsification step.
  std::vector<std::size_t> sparsify_layers;
  double keeping_rate = 1.0;
  std::size_t patch_dim = 0;
  std::size_t num_patches = 0;

  void validate() const;
};

struct EncodedFrame {
  /// [1 + live tokens, d] after the final layernorm; CLS at row 0.
  Tensor tokens;
  std::vector<long> origin;
  std::vector<SparsifyTrace> traces;
  /// Sequence length (CLS included) entering each layer, then the output length.
  std::vector<std::size_t> live_tokens;
};

/// Per-frame visual encoder. Parameters live under "<name>.".
class VitEncoder {
 public:
  explicit VitEncoder(EncoderConfig cfg, std::string name = "vit");

  const EncoderConfig& config() const noexcept { return cfg_; }
  const std::string& name() const noexcept { return name_; }
  void init(nn::ParamStore& store, Rng& rng) const;

  /// Patch embedding of the visible patches with CLS prepended.
  Tensor embed(nn::Binding& b, const patchmask::PatchState& state) const;
  EncodedFrame encode_frame(nn::Binding& b, const Tensor& embeddings, std::vector<long> origin) const;
  EncodedFrame encode(nn::Binding& b, const patchmask::PatchState& state) const;

 private:
  EncoderConfig cfg_;
  std::string name_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
};

struct TemporalConfig {
  std::size_t depth = 1;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t mlp_ratio = 4;
  std::size_t max_frames = 4;
};

/// Joint self-attention over the concatenated frame sequences with a learned
/// frame-index embedding. A single frame bypasses the module.
class TemporalEncoder {
 public:
  explicit TemporalEncoder(TemporalConfig cfg, std::string name = "temporal");

  const TemporalConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, Rng& rng) const;
  /// Returns [K * n, d]; frame k occupies rows [k n, (k + 1) n).
  Tensor operator()(nn::Binding& b, const std::vector<Tensor>& frames) const;

 private:
  TemporalConfig cfg_;
  std::string name_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
};

/// Splits [K * n, d] into K blocks of n rows.
std::vector<Tensor> split_frames(const Tensor& joint, std::size_t frames);

}  // namespace smaug::vit
