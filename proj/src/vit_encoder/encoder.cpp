#include "smaug/vit_encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smaug/diffcore/ops.hpp"

namespace smaug::vit {

using namespace diff;

void EncoderConfig::validate() const {
  if (depth == 0 || dim == 0 || heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("encoder: need depth > 0 and dim divisible by heads");
  }
  if (!(keeping_rate > 0.0 && keeping_rate <= 1.0)) {
    throw std::invalid_argument("encoder: keeping_rate " + std::to_string(keeping_rate) + " outside (0, 1]");
  }
  for (auto l : sparsify_layers) {
    if (l < 1 || l > depth) {
      throw std::invalid_argument("encoder: sparsify layer " + std::to_string(l) + " outside [1, " +
                                  std::to_string(depth) + "]");
    }
  }
  if (patch_dim == 0 || num_patches == 0) throw std::invalid_argument("encoder: patch geometry not set");
}

VitEncoder::VitEncoder(EncoderConfig cfg, std::string name) : cfg_(std::move(cfg)), name_(std::move(name)) {
  cfg_.validate();
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.dim * cfg_.mlp_ratio});
  }
  norm_ = {name_ + ".norm", cfg_.dim};
}

void VitEncoder::init(nn::ParamStore& store, Rng& rng) const {
  store.add(name_ + ".patch_proj",
            nn::normal_init(rng, {cfg_.patch_dim, cfg_.dim}, 1.0 / std::sqrt(static_cast<double>(cfg_.patch_dim))),
            true);
  store.add(name_ + ".pos", nn::normal_init(rng, {cfg_.num_patches, cfg_.dim}, 0.02), false);
  store.add(name_ + ".cls", nn::normal_init(rng, {1, cfg_.dim}, 0.02), false);
  for (const auto& blk : blocks_) blk.init(store, rng);
  norm_.init(store);
}

Tensor VitEncoder::embed(nn::Binding& b, const patchmask::PatchState& state) const {
  if (state.num_patches() != cfg_.num_patches || state.patch_dim() != cfg_.patch_dim) {
    throw ShapeError("encoder: patch grid does not match configuration");
  }
  return patchmask::embed_patches(state, b(name_ + ".patch_proj"), b(name_ + ".pos"), b(name_ + ".cls"));
}

EncodedFrame VitEncoder::encode_frame(nn::Binding& b, const Tensor& embeddings, std::vector<long> origin) const {
  EncodedFrame out;
  Tensor x = embeddings;
  out.origin = std::move(origin);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    out.live_tokens.push_back(x.dim(0));
    const bool sparsify_here = cfg_.keeping_rate < 1.0 &&
                               std::find(cfg_.sparsify_layers.begin(), cfg_.sparsify_layers.end(), l + 1) !=
                                   cfg_.sparsify_layers.end();
    auto res = blocks_[l](b, x, sparsify_here);
    x = res.out;
    if (sparsify_here && x.dim(0) >= 3) {
      auto sp = sparsify(x, cls_attention_mean(res.probs), cfg_.keeping_rate, out.origin, &res.probs);
      sp.trace.layer = l + 1;
      x = sp.tokens;
      out.origin = std::move(sp.origin);
      out.traces.push_back(std::move(sp.trace));
    }
  }
  out.live_tokens.push_back(x.dim(0));
  out.tokens = norm_(b, x);
  return out;
}

EncodedFrame VitEncoder::encode(nn::Binding& b, const patchmask::PatchState& state) const {
  std::vector<long> origin{kClsOrigin};
  for (auto i : state.visible_idx) origin.push_back(static_cast<long>(i));
  return encode_frame(b, embed(b, state), std::move(origin));
}

TemporalEncoder::TemporalEncoder(TemporalConfig cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.dim * cfg_.mlp_ratio});
  }
  norm_ = {name_ + ".norm", cfg_.dim};
}

void TemporalEncoder::init(nn::ParamStore& store, Rng& rng) const {
  store.add(name_ + ".frame_pos", nn::normal_init(rng, {cfg_.max_frames, cfg_.dim}, 0.02), false);
  for (const auto& blk : blocks_) blk.init(store, rng);
  norm_.init(store);
}

Tensor TemporalEncoder::operator()(nn::Binding& b, const std::vector<Tensor>& frames) const {
  if (frames.empty()) throw std::invalid_argument("temporal_encode: no frames");
  if (frames.size() == 1) return frames[0];
  if (frames.size() > cfg_.max_frames) {
    throw std::invalid_argument("temporal_encode: " + std::to_string(frames.size()) + " frames exceed max_frames " +
                                std::to_string(cfg_.max_frames));
  }
  const Shape s = frames[0].shape();
  const Tensor table = b(name_ + ".frame_pos");
  std::vector<Tensor> parts;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].shape() != s) {
      throw ShapeError("temporal_encode: ragged frame sequences " + shape_str(s) + " vs " +
                       shape_str(frames[k].shape()));
    }
    const std::size_t row = k;
    parts.push_back(add_row(frames[k], gather_rows(table, std::span<const std::size_t>(&row, 1))));
  }
  Tensor x = concat(parts, 0);
  for (const auto& blk : blocks_) x = blk(b, x).out;
  return norm_(b, x);
}

std::vector<Tensor> split_frames(const Tensor& joint, std::size_t frames) {
  if (frames == 0 || joint.dim(0) % frames != 0) {
    throw ShapeError("split_frames: " + shape_str(joint.shape()) + " not divisible into " + std::to_string(frames) +
                     " frames");
  }
  if (frames == 1) return {joint};
  const std::size_t n = joint.dim(0) / frames;
  std::vector<Tensor> out;
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < frames; ++k) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = k * n + i;
    out.push_back(gather_rows(joint, idx));
  }
  return out;
}

}  // namespace smaug::vit
