#include "smaug/patchmask/patchmask.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "smaug/diffcore/ops.hpp"

namespace smaug::patchmask {

using namespace diff;

PatchState patchify(std::span<const float> frame, std::size_t height, std::size_t width, std::size_t channels,
                    std::size_t patch) {
  if (patch == 0 || height == 0 || width == 0 || height % patch != 0 || width % patch != 0) {
    throw std::invalid_argument("patchify: frame " + std::to_string(height) + "x" + std::to_string(width) +
                                " not divisible by patch size " + std::to_string(patch));
  }
  if (frame.size() != height * width * channels) {
    throw std::invalid_argument("patchify: expected " + std::to_string(height * width * channels) +
                                " pixel values, got " + std::to_string(frame.size()));
  }
  PatchState s;
  s.rows = height / patch;
  s.cols = width / patch;
  s.patch = patch;
  s.channels = channels;
  const std::size_t pd = s.patch_dim();
  std::vector<double> px(s.num_patches() * pd);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      double* dst = px.data() + (r * s.cols + c) * pd;
      for (std::size_t y = 0; y < patch; ++y) {
        const float* src = frame.data() + ((r * patch + y) * width + c * patch) * channels;
        for (std::size_t i = 0; i < patch * channels; ++i) *dst++ = src[i];
      }
    }
  }
  s.patch_px = Tensor({s.num_patches(), pd}, std::move(px));
  s.visible_idx.resize(s.num_patches());
  for (std::size_t i = 0; i < s.num_patches(); ++i) s.visible_idx[i] = i;
  return s;
}

PatchState patchify(const vidio::VideoClip& clip, std::size_t frame_index) {
  const auto& g = clip.geometry;
  return patchify(clip.frame(frame_index), g.height, g.width, g.channels, g.patch);
}

std::vector<float> unpatchify(const PatchState& s) {
  const std::size_t width = s.cols * s.patch;
  const std::size_t pd = s.patch_dim();
  std::vector<float> frame(s.num_patches() * pd);
  auto px = s.patch_px.data();
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      const double* src = px.data() + (r * s.cols + c) * pd;
      for (std::size_t y = 0; y < s.patch; ++y) {
        float* dst = frame.data() + ((r * s.patch + y) * width + c * s.patch) * s.channels;
        for (std::size_t i = 0; i < s.patch * s.channels; ++i) dst[i] = static_cast<float>(*src++);
      }
    }
  }
  return frame;
}

std::size_t masked_count(std::size_t total, double ratio) {
  return static_cast<std::size_t>(std::nearbyint(ratio * static_cast<double>(total)));
}

void sample_tube_mask(std::vector<PatchState>& frames, double mask_ratio, Rng& rng, bool allow_high_ratio) {
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) {
    throw std::invalid_argument("sample_tube_mask: mask ratio " + std::to_string(mask_ratio) + " outside [0, 1]");
  }
  if (mask_ratio > kMaxMaskRatio && !allow_high_ratio) {
    throw std::invalid_argument("sample_tube_mask: mask ratio " + std::to_string(mask_ratio) + " exceeds " +
                                std::to_string(kMaxMaskRatio) + " (set allow_high_mask_ratio to override)");
  }
  if (frames.empty()) throw std::invalid_argument("sample_tube_mask: no frames");
  const std::size_t total = frames[0].num_patches();
  for (const auto& f : frames) {
    if (f.num_patches() != total) throw std::invalid_argument("sample_tube_mask: frames have different grids");
  }
  const auto masked = rng.subset(total, masked_count(total, mask_ratio));
  std::vector<bool> is_masked(total, false);
  for (auto i : masked) is_masked[i] = true;
  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < total; ++i) {
    if (!is_masked[i]) visible.push_back(i);
  }
  for (auto& f : frames) {
    f.masked_idx = masked;
    f.visible_idx = visible;
    f.mask_ratio = mask_ratio;
  }
}

std::vector<std::size_t> sample_frames(std::size_t total, std::size_t count, Rng& rng) {
  if (count == 0 || count > total) {
    throw std::invalid_argument("sample_frames: cannot take " + std::to_string(count) + " of " +
                                std::to_string(total) + " frames");
  }
  return rng.subset(total, count);
}

Tensor embed_patches(const PatchState& s, const Tensor& proj, const Tensor& pos_table, const Tensor& cls_token) {
  if (proj.rank() != 2 || proj.dim(0) != s.patch_dim()) {
    throw ShapeError("embed_patches: projection " + shape_str(proj.shape()) + " does not accept patch dim " +
                     std::to_string(s.patch_dim()));
  }
  const std::size_t d = proj.dim(1);
  if (pos_table.rank() != 2 || pos_table.dim(0) != s.num_patches() || pos_table.dim(1) != d) {
    throw ShapeError("embed_patches: position table " + shape_str(pos_table.shape()) + " expected [" +
                     std::to_string(s.num_patches()) + ", " + std::to_string(d) + "]");
  }
  if (cls_token.rank() != 2 || cls_token.dim(0) != 1 || cls_token.dim(1) != d) {
    throw ShapeError("embed_patches: cls token " + shape_str(cls_token.shape()) + " expected [1, " +
                     std::to_string(d) + "]");
  }
  if (s.visible_idx.empty()) return cls_token;
  const Tensor px = gather_rows(s.patch_px, s.visible_idx);
  const Tensor tokens = add(matmul(px, proj), gather_rows(pos_table, s.visible_idx));
  return concat({cls_token, tokens}, 0);
}

}  // namespace smaug::patchmask
