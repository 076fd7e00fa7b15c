#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smaug/frame_selector/selector.hpp"
#include "smaug/fusion/fusion.hpp"
#include "smaug/mae_decoder/decoder.hpp"
#include "smaug/objectives/losses.hpp"
#include "smaug/text_encoder/text_encoder.hpp"
#include "smaug/trainer/config.hpp"
#include "smaug/vidio/corpus.hpp"
#include "smaug/vit_encoder/encoder.hpp"

namespace smaug::trainer {

using diff::Tensor;

/// Module tags used for multiply-accumulate accounting.
namespace tags {
inline constexpr const char* kEncoder = "encoder";
inline constexpr const char* kTemporal = "temporal";
inline constexpr const char* kDecoder = "decoder";
inline constexpr const char* kText = "text";
inline constexpr const char* kSelector = "selector";
inline constexpr const char* kFusion = "fusion";
inline constexpr const char* kHeads = "heads";
}  // namespace tags

struct VideoFeatures {
  std::vector<patchmask::PatchState> states;
  /// Per-frame encoder output before temporal fusion.
  std::vector<vit::EncodedFrame> encoded;
  /// Per-frame token blocks after temporal fusion.
  std::vector<Tensor> frames;
  /// Mean of the per-frame CLS rows [1, d].
  Tensor cls;
};

/// Per-step random streams, derived from (seed, stream name, step) so one
/// stochastic component can change without disturbing the others.
struct StepStreams {
  Rng frames;
  Rng mask;
  Rng mlm;
  Rng gumbel;
  Rng vtm;
  StepStreams(std::uint64_t seed, std::uint64_t step);
};

/// The full pre-training network and its forward passes.
class SmaugModel {
 public:
  explicit SmaugModel(TrainConfig cfg);

  const TrainConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, std::uint64_t seed) const;

  const vit::VitEncoder& encoder() const noexcept { return encoder_; }
  const mae::MaeDecoder& decoder() const noexcept { return decoder_; }
  const text::TextEncoder& text_encoder() const noexcept { return text_; }
  const selector::FrameSelector& selector() const noexcept { return selector_; }
  const fusion::FusionEncoder& fusion() const noexcept { return fusion_; }

  /// Encodes the listed frames with the given mask ratio (tube mask drawn
  /// from `mask_rng` when the ratio is positive).
  VideoFeatures encode_video(nn::Binding& b, const vidio::VideoClip& clip, std::span<const std::size_t> frame_idx,
                             double mask_ratio, Rng* mask_rng) const;
  Tensor encode_text(nn::Binding& b, std::span<const std::uint32_t> ids) const;

  /// Training forward over one batch; returns the four losses and their sum.
  objectives::LossBundle forward(nn::Binding& b, std::span<const vidio::VideoTextPair* const> batch,
                                 StepStreams& streams) const;

  /// Evaluation frames: the middle frame for single-frame runs, otherwise
  /// frames_per_clip evenly spaced frames.
  std::vector<std::size_t> eval_frames(std::size_t clip_frames) const;
  /// Projected video / text embeddings [1, vtc_dim] for retrieval (no masking).
  Tensor video_embedding(nn::Binding& b, const vidio::VideoClip& clip) const;
  Tensor text_embedding(nn::Binding& b, const vidio::Caption& caption) const;
  /// Inference-mode frame choice for a clip and caption (multi-frame runs);
  /// indices refer to frames of the clip.
  selector::FrameSelection select_frames(nn::Binding& b, const vidio::VideoClip& clip,
                                         const vidio::Caption& caption) const;

 private:
  Tensor frame_cls(const VideoFeatures& v) const;

  TrainConfig cfg_;
  vit::VitEncoder encoder_;
  vit::TemporalEncoder temporal_;
  mae::MaeDecoder decoder_;
  text::TextEncoder text_;
  selector::FrameSelector selector_;
  fusion::FusionEncoder fusion_;
  nn::Linear proj_v_;
  nn::Linear proj_t_;
};

vit::EncoderConfig encoder_config(const TrainConfig& cfg);
mae::DecoderConfig decoder_config(const TrainConfig& cfg);

}  // namespace smaug::trainer
