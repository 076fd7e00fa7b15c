#pragma once

#include <string>
#include <vector>

#include "smaug/nn/layers.hpp"
#include "smaug/patchmask/patchmask.hpp"

namespace smaug::mae {

using diff::Tensor;

struct DecoderConfig {
  std::size_t depth = 3;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t encoder_dim = 64;
  std::size_t patch_dim = 0;
  std::size_t num_patches = 0;
  bool normalize_pixel_targets = false;

  void validate() const;
};

/// Lightweight reconstruction decoder: linear in, transformer blocks, linear
/// pixel head. Parameters live under "<name>.".
class MaeDecoder {
 public:
  explicit MaeDecoder(DecoderConfig cfg, std::string name = "dec");

  const DecoderConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, Rng& rng) const;

  /// Places every token with a patch origin at its grid slot (CLS at slot 0)
  /// and fills the remaining slots with the mask token, then adds position
  /// embeddings. `tokens` are already in decoder width.
  Tensor scatter(nn::Binding& b, const Tensor& tokens, const std::vector<long>& origin) const;

  /// Reconstructed patch pixels [num_patches, patch_dim] from encoder output.
  Tensor operator()(nn::Binding& b, const Tensor& encoded, const std::vector<long>& origin) const;

 private:
  DecoderConfig cfg_;
  std::string name_;
  nn::Linear embed_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
  nn::Linear head_;
};

/// Row index into concat(tokens, mask_token) for every slot of the full grid
/// plus CLS. Throws on duplicate or missing origins.
std::vector<std::size_t> scatter_index(const std::vector<long>& origin, std::size_t num_patches);

/// Mean squared error over the masked patches only; zero (constant) when
/// nothing is masked.
Tensor mvm_loss(const Tensor& decoded, const patchmask::PatchState& state, bool normalize_targets = false);

}  // namespace smaug::mae
