#pragma once

#include <span>

#include "smaug/diffcore/tensor.hpp"

namespace smaug::objectives {

using diff::Tensor;

inline constexpr double kTemperature = 0.07;

struct VtcParts {
  Tensor loss;
  Tensor v2t;
  Tensor t2v;
};

/// Symmetric InfoNCE from a raw similarity matrix s[i][j] = s(v_i, t_j)
/// (scaled by 1/tau inside).
VtcParts vtc_from_similarity(const Tensor& sim, double tau = kTemperature);

/// Cosine similarities of row-wise L2-normalised projections [B_v, B_t].
Tensor cosine_similarity(const Tensor& video_proj, const Tensor& text_proj);

/// VTC over projected video and text features [B, p].
VtcParts vtc_parts(const Tensor& video_proj, const Tensor& text_proj, double tau = kTemperature);
Tensor vtc_loss(const Tensor& video_proj, const Tensor& text_proj, double tau = kTemperature);

/// Mean two-way cross-entropy; labels are 0 (mismatch) or 1 (match).
Tensor vtm_loss(const Tensor& logits, std::span<const std::size_t> labels);

/// Mean cross-entropy over masked slots; a constant zero when there are none.
Tensor mlm_loss(const Tensor& logits, std::span<const std::size_t> targets);

struct LossBundle {
  Tensor vtc;
  Tensor vtm;
  Tensor mlm;
  Tensor mvm;
  Tensor total;
};

/// Unweighted sum of the four components.
LossBundle total_loss(Tensor vtc, Tensor vtm, Tensor mlm, Tensor mvm);

}  // namespace smaug::objectives
