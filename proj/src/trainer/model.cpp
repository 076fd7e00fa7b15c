#include "smaug/trainer/model.hpp"

#include <stdexcept>

#include "smaug/diffcore/mac_counter.hpp"
#include "smaug/diffcore/ops.hpp"

namespace smaug::trainer {

using namespace diff;

StepStreams::StepStreams(std::uint64_t seed, std::uint64_t step)
    : frames(seed, "frames", step),
      mask(seed, "mask", step),
      mlm(seed, "mlm", step),
      gumbel(seed, "gumbel", step),
      vtm(seed, "vtm", step) {}

vit::EncoderConfig encoder_config(const TrainConfig& cfg) {
  vit::EncoderConfig e;
  e.depth = cfg.depth;
  e.heads = cfg.heads;
  e.dim = cfg.dim;
  e.mlp_ratio = cfg.mlp_ratio;
  e.sparsify_layers = cfg.sparsify_layers;
  e.keeping_rate = cfg.keeping_rate;
  e.patch_dim = cfg.patch_size * cfg.patch_size * cfg.channels;
  e.num_patches = (cfg.height / cfg.patch_size) * (cfg.width / cfg.patch_size);
  return e;
}

mae::DecoderConfig decoder_config(const TrainConfig& cfg) {
  mae::DecoderConfig d;
  d.depth = cfg.decoder_depth;
  d.dim = cfg.decoder_dim;
  d.heads = cfg.heads;
  d.mlp_ratio = cfg.mlp_ratio;
  d.encoder_dim = cfg.dim;
  d.patch_dim = cfg.patch_size * cfg.patch_size * cfg.channels;
  d.num_patches = (cfg.height / cfg.patch_size) * (cfg.width / cfg.patch_size);
  d.normalize_pixel_targets = cfg.normalize_pixel_targets;
  return d;
}

namespace {

vit::TemporalConfig temporal_config(const TrainConfig& cfg) {
  return {cfg.temporal_depth, cfg.heads, cfg.dim, cfg.mlp_ratio, std::max<std::size_t>(cfg.frames, 1)};
}

text::TextConfig text_config(const TrainConfig& cfg) {
  text::TextConfig t;
  t.depth = cfg.text_depth;
  t.heads = cfg.heads;
  t.dim = cfg.dim;
  t.mlp_ratio = cfg.mlp_ratio;
  t.vocab_size = vidio::Vocab::instance().size();
  return t;
}

selector::SelectorConfig selector_config(const TrainConfig& cfg) {
  selector::SelectorConfig s;
  s.blocks = cfg.selector_blocks;
  s.heads = cfg.selector_heads;
  s.dim = cfg.dim;
  s.hidden = cfg.selector_hidden;
  s.kappa = cfg.kappa;
  s.gumbel_tau = cfg.gumbel_tau;
  return s;
}

fusion::FusionConfig fusion_config(const TrainConfig& cfg) {
  fusion::FusionConfig f;
  f.depth = cfg.fusion_depth;
  f.heads = cfg.heads;
  f.dim = cfg.dim;
  f.mlp_ratio = cfg.mlp_ratio;
  f.vocab_size = vidio::Vocab::instance().size();
  return f;
}

Tensor row0(const Tensor& x) {
  const std::size_t zero = 0;
  return gather_rows(x, std::span<const std::size_t>(&zero, 1));
}

}  // namespace

SmaugModel::SmaugModel(TrainConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      encoder_(encoder_config(cfg_)),
      temporal_(temporal_config(cfg_)),
      decoder_(decoder_config(cfg_)),
      text_(text_config(cfg_)),
      selector_(selector_config(cfg_)),
      fusion_(fusion_config(cfg_)),
      proj_v_{"proj_v", cfg_.dim, cfg_.vtc_dim},
      proj_t_{"proj_t", cfg_.dim, cfg_.vtc_dim} {}

void SmaugModel::init(nn::ParamStore& store, std::uint64_t seed) const {
  Rng rng(seed, "init");
  encoder_.init(store, rng);
  temporal_.init(store, rng);
  decoder_.init(store, rng);
  text_.init(store, rng);
  selector_.init(store, rng);
  fusion_.init(store, rng);
  proj_v_.init(store, rng);
  proj_t_.init(store, rng);
}

VideoFeatures SmaugModel::encode_video(nn::Binding& b, const vidio::VideoClip& clip,
                                       std::span<const std::size_t> frame_idx, double mask_ratio,
                                       Rng* mask_rng) const {
  VideoFeatures v;
  for (auto f : frame_idx) v.states.push_back(patchmask::patchify(clip, f));
  if (mask_ratio > 0.0) {
    if (!mask_rng) throw std::invalid_argument("encode_video: masking needs an rng");
    patchmask::sample_tube_mask(v.states, mask_ratio, *mask_rng, cfg_.allow_high_mask_ratio);
  }
  {
    MacScope scope(tags::kEncoder);
    for (const auto& s : v.states) v.encoded.push_back(encoder_.encode(b, s));
  }
  std::vector<Tensor> blocks;
  for (const auto& e : v.encoded) blocks.push_back(e.tokens);
  if (blocks.size() == 1) {
    v.frames = blocks;
  } else {
    MacScope scope(tags::kTemporal);
    v.frames = vit::split_frames(temporal_(b, blocks), blocks.size());
  }
  Tensor acc;
  for (const auto& f : v.frames) acc = acc.defined() ? add(acc, row0(f)) : row0(f);
  v.cls = v.frames.size() == 1 ? acc : scale(acc, 1.0 / static_cast<double>(v.frames.size()));
  return v;
}

Tensor SmaugModel::encode_text(nn::Binding& b, std::span<const std::uint32_t> ids) const {
  MacScope scope(tags::kText);
  return text_(b, ids);
}

Tensor SmaugModel::frame_cls(const VideoFeatures& v) const {
  std::vector<Tensor> rows;
  for (const auto& f : v.frames) rows.push_back(row0(f));
  return concat(rows, 0);
}

objectives::LossBundle SmaugModel::forward(nn::Binding& b, std::span<const vidio::VideoTextPair* const> batch,
                                           StepStreams& rs) const {
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  const std::size_t n = batch.size();
  std::vector<VideoFeatures> videos;
  std::vector<Tensor> texts;
  std::vector<Tensor> mvm_terms;
  for (const auto* p : batch) {
    const auto& clip = p->clip;
    if (clip.geometry != cfg_.geometry()) throw std::invalid_argument("forward: clip geometry differs from config");
    const auto idx = patchmask::sample_frames(clip.geometry.frames, cfg_.frames_per_clip, rs.frames);
    videos.push_back(encode_video(b, clip, idx, cfg_.mask_ratio, &rs.mask));
    texts.push_back(encode_text(b, p->caption.token_ids));
    // Reconstruction on every sampled frame, before any frame selection.
    MacScope scope(tags::kDecoder);
    const auto& v = videos.back();
    Tensor per_clip;
    for (std::size_t k = 0; k < v.encoded.size(); ++k) {
      Tensor l = mae::mvm_loss(decoder_(b, v.encoded[k].tokens, v.encoded[k].origin), v.states[k],
                               cfg_.normalize_pixel_targets);
      per_clip = per_clip.defined() ? add(per_clip, l) : l;
    }
    mvm_terms.push_back(v.encoded.size() == 1 ? per_clip : scale(per_clip, 1.0 / static_cast<double>(v.encoded.size())));
  }

  // Contrastive alignment of pooled CLS features.
  Tensor l_vtc;
  {
    MacScope scope(tags::kHeads);
    std::vector<Tensor> vc, tc;
    for (std::size_t i = 0; i < n; ++i) {
      vc.push_back(videos[i].cls);
      tc.push_back(row0(texts[i]));
    }
    l_vtc = objectives::vtc_loss(proj_v_(b, concat(vc, 0)), proj_t_(b, concat(tc, 0)), cfg_.temperature);
  }

  // Visual input to fusion: all tokens (single frame) or the selected frames.
  std::vector<Tensor> visual;
  for (std::size_t i = 0; i < n; ++i) {
    if (videos[i].frames.size() == 1) {
      visual.push_back(videos[i].frames[0]);
      continue;
    }
    MacScope scope(tags::kSelector);
    Tensor scores = selector_.score(b, frame_cls(videos[i]), row0(texts[i]));
    auto sel = selector::gumbel_topk_select(scores, cfg_.kappa, cfg_.gumbel_tau, &rs.gumbel, selector::Mode::Train);
    visual.push_back(selector::apply_selection(videos[i].frames, sel));
  }

  std::vector<Tensor> vtm_logits, mlm_logits;
  std::vector<std::size_t> vtm_labels, mlm_targets;
  for (std::size_t i = 0; i < n; ++i) {
    MacScope scope(tags::kFusion);
    vtm_logits.push_back(fusion_(b, texts[i], visual[i]).vtm_logits);
    vtm_labels.push_back(1);
    if (n > 1) {
      std::size_t j = rs.vtm.below(n - 1);
      if (j >= i) ++j;
      vtm_logits.push_back(fusion_(b, texts[j], visual[i]).vtm_logits);
      vtm_labels.push_back(0);
    }
    auto m = text::mlm_corrupt(batch[i]->caption, rs.mlm, cfg_.mlm_ratio, cfg_.mlm_min_one);
    if (m.positions.empty()) continue;
    Tensor corrupted;
    {
      MacScope text_scope(tags::kText);
      corrupted = text_(b, m.corrupted);
    }
    mlm_logits.push_back(fusion_(b, corrupted, visual[i], m.positions).mlm_logits);
    for (auto t : m.targets) mlm_targets.push_back(t);
  }
  Tensor l_vtm = objectives::vtm_loss(concat(vtm_logits, 0), vtm_labels);
  Tensor l_mlm = mlm_logits.empty() ? objectives::mlm_loss(Tensor(), {})
                                    : objectives::mlm_loss(concat(mlm_logits, 0), mlm_targets);
  Tensor l_mvm = mvm_terms[0];
  for (std::size_t i = 1; i < n; ++i) l_mvm = add(l_mvm, mvm_terms[i]);
  if (n > 1) l_mvm = scale(l_mvm, 1.0 / static_cast<double>(n));
  return objectives::total_loss(l_vtc, l_vtm, l_mlm, l_mvm);
}

std::vector<std::size_t> SmaugModel::eval_frames(std::size_t clip_frames) const {
  if (cfg_.frames_per_clip == 1) return {clip_frames / 2};
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cfg_.frames_per_clip; ++i) idx.push_back(i * clip_frames / cfg_.frames_per_clip);
  return idx;
}

Tensor SmaugModel::video_embedding(nn::Binding& b, const vidio::VideoClip& clip) const {
  const auto idx = eval_frames(clip.geometry.frames);
  auto v = encode_video(b, clip, idx, 0.0, nullptr);
  MacScope scope(tags::kHeads);
  return proj_v_(b, v.cls);
}

Tensor SmaugModel::text_embedding(nn::Binding& b, const vidio::Caption& caption) const {
  Tensor t = encode_text(b, caption.token_ids);
  MacScope scope(tags::kHeads);
  return proj_t_(b, row0(t));
}

selector::FrameSelection SmaugModel::select_frames(nn::Binding& b, const vidio::VideoClip& clip,
                                                   const vidio::Caption& caption) const {
  const auto idx = eval_frames(clip.geometry.frames);
  auto v = encode_video(b, clip, idx, 0.0, nullptr);
  if (v.frames.size() < 2) throw std::invalid_argument("select_frames: needs a multi-frame configuration");
  Tensor t = encode_text(b, caption.token_ids);
  MacScope scope(tags::kSelector);
  Tensor scores = selector_.score(b, frame_cls(v), row0(t));
  auto sel = selector::gumbel_topk_select(scores, cfg_.kappa, cfg_.gumbel_tau, nullptr, selector::Mode::Infer);
  for (auto& i : sel.indices) i = idx[i];
  return sel;
}

}  // namespace smaug::trainer
