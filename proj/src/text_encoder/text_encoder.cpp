#include "smaug/text_encoder/text_encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "smaug/diffcore/ops.hpp"
#include "smaug/patchmask/patchmask.hpp"

namespace smaug::text {

using namespace diff;

TextEncoder::TextEncoder(TextConfig cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {
  if (cfg_.vocab_size == 0) throw std::invalid_argument("text encoder: vocab_size not set");
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.dim * cfg_.mlp_ratio});
  }
  norm_ = {name_ + ".norm", cfg_.dim};
}

void TextEncoder::init(nn::ParamStore& store, Rng& rng) const {
  store.add(name_ + ".tok", nn::normal_init(rng, {cfg_.vocab_size, cfg_.dim}, 0.02), true);
  store.add(name_ + ".pos", nn::normal_init(rng, {cfg_.max_len, cfg_.dim}, 0.02), false);
  for (const auto& blk : blocks_) blk.init(store, rng);
  norm_.init(store);
}

Tensor TextEncoder::operator()(nn::Binding& b, std::span<const std::uint32_t> ids) const {
  if (ids.empty()) throw std::invalid_argument("text encoder: empty caption");
  if (ids.size() > cfg_.max_len) {
    throw std::invalid_argument("text encoder: caption length " + std::to_string(ids.size()) + " exceeds max_len " +
                                std::to_string(cfg_.max_len));
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<std::size_t> pos(ids.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  Tensor x = add(embedding(b(name_ + ".tok"), idx), gather_rows(b(name_ + ".pos"), pos));
  for (const auto& blk : blocks_) x = blk(b, x).out;
  return norm_(b, x);
}

MlmBatch mlm_corrupt(const vidio::Caption& caption, Rng& rng, double ratio, bool min_one) {
  if (caption.size() < 2) throw std::invalid_argument("mlm_corrupt: caption needs CLS and at least one token");
  const std::size_t maskable = caption.size() - 1;
  std::size_t count = patchmask::masked_count(maskable, ratio);
  if (min_one && count == 0) count = 1;
  MlmBatch m;
  m.corrupted = caption.token_ids;
  for (auto p : rng.subset(maskable, count)) {
    const std::size_t pos = p + 1;
    m.positions.push_back(pos);
    m.targets.push_back(m.corrupted[pos]);
    m.corrupted[pos] = vidio::kMaskId;
  }
  return m;
}

std::vector<std::uint32_t> mlm_restore(const MlmBatch& batch) {
  auto ids = batch.corrupted;
  for (std::size_t i = 0; i < batch.positions.size(); ++i) ids.at(batch.positions[i]) = batch.targets[i];
  return ids;
}

}  // namespace smaug::text
