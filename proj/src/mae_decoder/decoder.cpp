#include "smaug/mae_decoder/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "smaug/diffcore/ops.hpp"
#include "smaug/vit_encoder/sparsify.hpp"

namespace smaug::mae {

using namespace diff;

void DecoderConfig::validate() const {
  if (depth == 0) throw std::invalid_argument("decoder: depth must be at least 1");
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("decoder: dim must be divisible by heads");
  }
  if (patch_dim == 0 || num_patches == 0) throw std::invalid_argument("decoder: patch geometry not set");
}

MaeDecoder::MaeDecoder(DecoderConfig cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {
  cfg_.validate();
  embed_ = {name_ + ".embed", cfg_.encoder_dim, cfg_.dim};
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.dim * cfg_.mlp_ratio});
  }
  norm_ = {name_ + ".norm", cfg_.dim};
  head_ = {name_ + ".head", cfg_.dim, cfg_.patch_dim};
}

void MaeDecoder::init(nn::ParamStore& store, Rng& rng) const {
  embed_.init(store, rng);
  store.add(name_ + ".mask_token", nn::normal_init(rng, {1, cfg_.dim}, 0.02), false);
  store.add(name_ + ".pos", nn::normal_init(rng, {cfg_.num_patches + 1, cfg_.dim}, 0.02), false);
  for (const auto& blk : blocks_) blk.init(store, rng);
  norm_.init(store);
  head_.init(store, rng);
}

std::vector<std::size_t> scatter_index(const std::vector<long>& origin, std::size_t num_patches) {
  const std::size_t mask_row = origin.size();
  std::vector<std::size_t> idx(num_patches + 1, mask_row);
  std::vector<bool> filled(num_patches + 1, false);
  for (std::size_t r = 0; r < origin.size(); ++r) {
    const long o = origin[r];
    if (o == vit::kFusedOrigin) continue;
    std::size_t slot = 0;
    if (o == vit::kClsOrigin) {
      slot = 0;
    } else if (o >= 0 && static_cast<std::size_t>(o) < num_patches) {
      slot = static_cast<std::size_t>(o) + 1;
    } else {
      throw std::invalid_argument("scatter: token origin " + std::to_string(o) + " outside grid of " +
                                  std::to_string(num_patches));
    }
    if (filled[slot]) throw std::invalid_argument("scatter: slot " + std::to_string(slot) + " filled twice");
    filled[slot] = true;
    idx[slot] = r;
  }
  if (!filled[0]) throw std::invalid_argument("scatter: missing CLS token");
  return idx;
}

Tensor MaeDecoder::scatter(nn::Binding& b, const Tensor& tokens, const std::vector<long>& origin) const {
  if (tokens.rank() != 2 || tokens.dim(0) != origin.size() || tokens.dim(1) != cfg_.dim) {
    throw ShapeError("scatter: tokens " + shape_str(tokens.shape()) + " with " + std::to_string(origin.size()) +
                     " origins, decoder dim " + std::to_string(cfg_.dim));
  }
  const auto idx = scatter_index(origin, cfg_.num_patches);
  const Tensor source = concat({tokens, b(name_ + ".mask_token")}, 0);
  return add(gather_rows(source, idx), b(name_ + ".pos"));
}

Tensor MaeDecoder::operator()(nn::Binding& b, const Tensor& encoded, const std::vector<long>& origin) const {
  Tensor x = scatter(b, embed_(b, encoded), origin);
  for (const auto& blk : blocks_) x = blk(b, x).out;
  x = head_(b, norm_(b, x));
  std::vector<std::size_t> rows(cfg_.num_patches);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i + 1;
  return gather_rows(x, rows);
}

Tensor mvm_loss(const Tensor& decoded, const patchmask::PatchState& state, bool normalize_targets) {
  if (decoded.shape() != state.patch_px.shape()) {
    throw ShapeError("mvm_loss: decoded " + shape_str(decoded.shape()) + " vs patches " +
                     shape_str(state.patch_px.shape()));
  }
  if (state.masked_idx.empty()) return Tensor::scalar(0.0);
  Tensor target = gather_rows(state.patch_px, state.masked_idx);
  if (normalize_targets) {
    const std::size_t pd = target.dim(1);
    std::vector<double> t = target.to_vector();
    for (std::size_t r = 0; r < target.dim(0); ++r) {
      double* row = t.data() + r * pd;
      double mu = 0.0, var = 0.0;
      for (std::size_t i = 0; i < pd; ++i) mu += row[i];
      mu /= static_cast<double>(pd);
      for (std::size_t i = 0; i < pd; ++i) var += (row[i] - mu) * (row[i] - mu);
      var /= static_cast<double>(pd);
      const double inv = 1.0 / std::sqrt(var + 1e-6);
      for (std::size_t i = 0; i < pd; ++i) row[i] = (row[i] - mu) * inv;
    }
    target = Tensor(target.shape(), std::move(t));
  }
  return mse(gather_rows(decoded, state.masked_idx), target);
}

}  // namespace smaug::mae
