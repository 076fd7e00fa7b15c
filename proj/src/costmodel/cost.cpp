#include "smaug/costmodel/cost.hpp"

#include <algorithm>
#include <stdexcept>

#include "smaug/diffcore/mac_counter.hpp"
#include "smaug/nn/params.hpp"
#include "smaug/patchmask/patchmask.hpp"
#include "smaug/trainer/model.hpp"
#include "smaug/vidio/corpus.hpp"
#include "smaug/vidio/vocab.hpp"
#include "smaug/vit_encoder/sparsify.hpp"

namespace smaug::cost {

namespace tags = trainer::tags;
using u64 = std::uint64_t;

std::vector<std::size_t> encoder_token_counts(std::size_t num_patches, double mask_ratio, double keeping_rate,
                                              const std::vector<std::size_t>& sparsify_layers, std::size_t depth) {
  std::size_t n = num_patches - (mask_ratio > 0.0 ? patchmask::masked_count(num_patches, mask_ratio) : 0) + 1;
  std::vector<std::size_t> counts;
  for (std::size_t l = 1; l <= depth; ++l) {
    counts.push_back(n);
    const bool here = keeping_rate < 1.0 &&
                      std::find(sparsify_layers.begin(), sparsify_layers.end(), l) != sparsify_layers.end();
    if (here && n >= 3) {
      const std::size_t k = vit::keep_count(n - 1, keeping_rate);
      n = 1 + k + (k < n - 1 ? 1 : 0);
    }
  }
  counts.push_back(n);
  return counts;
}

u64 CostReport::total() const {
  u64 t = 0;
  for (const auto& [k, v] : macs) t += v;
  return t;
}

u64 CostReport::at(const std::string& tag) const {
  auto it = macs.find(tag);
  return it == macs.end() ? 0 : it->second;
}

u64 block_macs(u64 n, u64 d, u64 hidden) { return 4 * n * d * d + 2 * n * n * d + 2 * n * d * hidden; }

namespace {

u64 fusion_block_macs(u64 l, u64 m, u64 d, u64 hidden) {
  const u64 self = 4 * l * d * d + 2 * l * l * d;
  const u64 cross = 2 * l * d * d + 2 * m * d * d + 2 * l * m * d;
  return self + cross + 2 * l * d * hidden;
}

}  // namespace

CostReport analytic_cost(const trainer::TrainConfig& cfg, const Workload& w) {
  if (w.batch == 0 || w.text_len < 2) throw std::invalid_argument("analytic_cost: empty batch or caption");
  CostReport r;
  const u64 d = cfg.dim, hid = cfg.mlp_ratio * cfg.dim;
  const u64 num_patches = (cfg.height / cfg.patch_size) * (cfg.width / cfg.patch_size);
  const u64 patch_dim = cfg.patch_size * cfg.patch_size * cfg.channels;
  const u64 k_frames = cfg.frames_per_clip;
  const u64 batch = w.batch;
  const u64 lt = w.text_len;

  r.encoder_tokens =
      encoder_token_counts(num_patches, cfg.mask_ratio, cfg.keeping_rate, cfg.sparsify_layers, cfg.depth);
  const auto& tok = r.encoder_tokens;
  const u64 n_out = tok.back();

  u64 enc = (tok.front() - 1) * patch_dim * d;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    enc += block_macs(tok[l], d, hid);
    const bool here = cfg.keeping_rate < 1.0 && tok[l] >= 3 &&
                      std::find(cfg.sparsify_layers.begin(), cfg.sparsify_layers.end(), l + 1) !=
                          cfg.sparsify_layers.end();
    // Fused token: weights over the inattentive set times their features.
    if (here) enc += (tok[l] - 1 - vit::keep_count(tok[l] - 1, cfg.keeping_rate)) * d;
  }
  r.macs[tags::kEncoder] = batch * k_frames * enc;

  if (k_frames > 1) {
    u64 t = 0;
    for (std::size_t l = 0; l < cfg.temporal_depth; ++l) t += block_macs(k_frames * n_out, d, hid);
    r.macs[tags::kTemporal] = batch * t;
  }

  if (w.reconstruction) {
    const u64 dd = cfg.decoder_dim, grid = num_patches + 1;
    u64 dec = n_out * d * dd + grid * dd * patch_dim;
    for (std::size_t l = 0; l < cfg.decoder_depth; ++l) dec += block_macs(grid, dd, cfg.mlp_ratio * dd);
    r.macs[tags::kDecoder] = batch * k_frames * dec;
  }

  // Caption encoding once for retrieval features and once for the MLM input.
  u64 text = 0;
  for (std::size_t l = 0; l < cfg.text_depth; ++l) text += block_macs(lt, d, hid);
  r.macs[tags::kText] = batch * 2 * text;

  r.macs[tags::kHeads] = batch * 2 * d * cfg.vtc_dim + batch * batch * cfg.vtc_dim;

  const bool select = k_frames > 1 && w.frame_selection;
  const u64 frames_fused = select ? cfg.kappa : k_frames;
  r.fusion_context = frames_fused * n_out;
  if (select) {
    const u64 sh = cfg.selector_hidden;
    u64 sel = k_frames * 2 * d * d + k_frames * d;
    for (std::size_t l = 0; l < cfg.selector_blocks; ++l) sel += block_macs(k_frames, d, sh);
    sel += cfg.kappa * k_frames * n_out * d;
    r.macs[tags::kSelector] = batch * sel;
  }

  u64 pass = 0;
  for (std::size_t l = 0; l < cfg.fusion_depth; ++l) pass += fusion_block_macs(lt, r.fusion_context, d, hid);
  pass += d * 2;
  const u64 maskable = lt - 1;
  u64 mlm = patchmask::masked_count(maskable, cfg.mlm_ratio);
  if (cfg.mlm_min_one && mlm == 0) mlm = 1;
  const u64 vocab = vidio::Vocab::instance().size();
  const u64 passes = batch > 1 ? 2 : 1;
  u64 fusion = batch * passes * pass;
  if (mlm > 0) fusion += batch * (pass + mlm * d * vocab);
  r.macs[tags::kFusion] = fusion;
  return r;
}

CostReport instrumented_cost(const trainer::TrainConfig& cfg, const Workload& w) {
  if (!w.reconstruction) throw std::invalid_argument("instrumented_cost: the model always reconstructs");
  if (cfg.frames_per_clip > 1 && !w.frame_selection) {
    throw std::invalid_argument("instrumented_cost: multi-frame models always select frames");
  }
  trainer::SmaugModel model(cfg);
  nn::ParamStore params;
  model.init(params, cfg.seed);

  vidio::CorpusOptions o;
  o.seed = cfg.seed;
  o.n_concepts = cfg.n_concepts;
  o.geometry = cfg.geometry();
  o.distractor_frac = cfg.distractor_frac;
  std::vector<vidio::VideoTextPair> pairs;
  for (std::size_t attempt = 0; attempt < 8 && pairs.size() < w.batch; ++attempt) {
    o.n_pairs = 64 << attempt;
    pairs.clear();
    for (auto& p : vidio::generate_corpus(o)) {
      if (p.caption.token_ids.size() == w.text_len && pairs.size() < w.batch) pairs.push_back(std::move(p));
    }
  }
  if (pairs.size() < w.batch) {
    throw std::invalid_argument("instrumented_cost: no " + std::to_string(w.batch) + " captions of length " +
                                std::to_string(w.text_len));
  }
  std::vector<const vidio::VideoTextPair*> batch;
  for (const auto& p : pairs) batch.push_back(&p);

  CostReport r;
  diff::MacCounter counter;
  {
    diff::CountingSession session(counter);
    nn::Binding b(params, nullptr);
    trainer::StepStreams streams(cfg.seed, 0);
    model.forward(b, batch, streams);
  }
  r.macs = counter.totals();
  nn::Binding b(params, nullptr);
  const auto frame = patchmask::patchify(pairs[0].clip, 0);
  std::vector<patchmask::PatchState> states{frame};
  if (cfg.mask_ratio > 0.0) {
    Rng rng(cfg.seed, "mask", 0);
    patchmask::sample_tube_mask(states, cfg.mask_ratio, rng, cfg.allow_high_mask_ratio);
  }
  diff::MacCounter scratch;
  diff::CountingSession quiet(scratch);
  r.encoder_tokens = vit::VitEncoder(trainer::encoder_config(cfg)).encode(b, states[0]).live_tokens;
  r.fusion_context = (cfg.frames_per_clip > 1 ? cfg.kappa : 1) * r.encoder_tokens.back();
  return r;
}

Variant baseline_of(const trainer::TrainConfig& cfg, const Workload& w) {
  Variant v{"baseline", cfg, w};
  v.cfg.mask_ratio = 0.0;
  v.cfg.keeping_rate = 1.0;
  v.workload.reconstruction = false;
  v.workload.frame_selection = false;
  return v;
}

trainer::TrainConfig vit_b_config() {
  trainer::TrainConfig c;
  c.height = 224;
  c.width = 224;
  c.patch_size = 16;
  c.frames = 4;
  c.frames_per_clip = 4;
  c.kappa = 2;
  c.dim = 768;
  c.heads = 12;
  c.depth = 12;
  c.sparsify_layers = {4, 7, 10};
  c.keeping_rate = 0.8;
  c.mask_ratio = 0.5;
  c.decoder_dim = 384;
  c.decoder_depth = 3;
  c.text_depth = 9;
  c.fusion_depth = 3;
  c.selector_blocks = 2;
  c.selector_heads = 2;
  c.selector_hidden = 2048;
  c.vtc_dim = 256;
  return c;
}

Workload vit_b_workload() {
  Workload w;
  w.text_len = 32;
  w.batch = 32;
  return w;
}

std::vector<Variant> component_ladder(const trainer::TrainConfig& full, const Workload& w) {
  std::vector<Variant> out;
  Variant base = baseline_of(full, w);
  out.push_back(base);
  Variant mae = base;
  mae.name = "mae";
  mae.cfg.mask_ratio = full.mask_ratio;
  mae.workload.reconstruction = true;
  out.push_back(mae);
  Variant vts = mae;
  vts.name = "mae+vts";
  vts.cfg.keeping_rate = full.keeping_rate;
  out.push_back(vts);
  Variant fs = vts;
  fs.name = "mae+vts+fs";
  fs.workload.frame_selection = true;
  out.push_back(fs);
  return out;
}

}  // namespace smaug::cost
