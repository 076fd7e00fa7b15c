#pragma once

#include <span>
#include <vector>

#include "smaug/common/rng.hpp"
#include "smaug/diffcore/tensor.hpp"
#include "smaug/vidio/corpus.hpp"

namespace smaug::patchmask {

using diff::Tensor;

/// Largest mask ratio accepted without an explicit override.
inline constexpr double kMaxMaskRatio = 0.65;

struct PatchState {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch = 0;
  std::size_t channels = 0;
  /// [rows*cols, patch*patch*channels]; patch pixels in (y, x, c) order.
  Tensor patch_px;
  std::vector<std::size_t> visible_idx;
  std::vector<std::size_t> masked_idx;
  double mask_ratio = 0.0;

  std::size_t num_patches() const noexcept { return rows * cols; }
  std::size_t patch_dim() const noexcept { return patch * patch * channels; }
};

/// Splits an H x W x C frame into non-overlapping patches in row-major order.
/// Every patch starts visible.
PatchState patchify(std::span<const float> frame, std::size_t height, std::size_t width, std::size_t channels,
                    std::size_t patch);
PatchState patchify(const vidio::VideoClip& clip, std::size_t frame_index);

/// Inverse of patchify.
std::vector<float> unpatchify(const PatchState& state);

/// round(ratio * total), ties to even.
std::size_t masked_count(std::size_t total, double ratio);

/// Draws one uniform subset of patch indices and masks it in every frame.
/// Ratios above kMaxMaskRatio are rejected unless `allow_high_ratio`.
void sample_tube_mask(std::vector<PatchState>& frames, double mask_ratio, Rng& rng, bool allow_high_ratio = false);

/// Uniform choice of `count` of `total` frame indices, in temporal order.
std::vector<std::size_t> sample_frames(std::size_t total, std::size_t count, Rng& rng);

/// CLS followed by proj(patch) + pos[patch] for every visible patch, in
/// ascending patch order. proj is [patch_dim, d], pos_table [num_patches, d],
/// cls_token [1, d]. Result is [1 + |visible|, d].
Tensor embed_patches(const PatchState& state, const Tensor& proj, const Tensor& pos_table, const Tensor& cls_token);

}  // namespace smaug::patchmask
