#include "smaug/fusion/fusion.hpp"

#include <stdexcept>

#include "smaug/diffcore/ops.hpp"

namespace smaug::fusion {

using namespace diff;

FusionEncoder::FusionEncoder(FusionConfig cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {
  if (cfg_.vocab_size == 0) throw std::invalid_argument("fusion: vocab_size not set");
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.dim * cfg_.mlp_ratio});
  }
  norm_ = {name_ + ".norm", cfg_.dim};
  vtm_head_ = {name_ + ".vtm", cfg_.dim, 2};
  mlm_norm_ = {name_ + ".mlm_norm", cfg_.dim};
  mlm_head_ = {name_ + ".mlm", cfg_.dim, cfg_.vocab_size};
}

void FusionEncoder::init(nn::ParamStore& store, Rng& rng) const {
  for (const auto& blk : blocks_) blk.init(store, rng);
  norm_.init(store);
  vtm_head_.init(store, rng);
  mlm_norm_.init(store);
  mlm_head_.init(store, rng);
}

FusionOutput FusionEncoder::operator()(nn::Binding& b, const Tensor& text, const Tensor& visual,
                                       std::span<const std::size_t> mlm_positions) const {
  if (text.rank() != 2 || visual.rank() != 2 || text.dim(1) != cfg_.dim || visual.dim(1) != cfg_.dim) {
    throw ShapeError("fusion: text " + shape_str(text.shape()) + " and visual " + shape_str(visual.shape()) +
                     " must both have width " + std::to_string(cfg_.dim));
  }
  FusionOutput out;
  Tensor x = text;
  for (const auto& blk : blocks_) x = blk(b, x, visual);
  out.sequence = norm_(b, x);
  const std::size_t zero = 0;
  out.cls = gather_rows(out.sequence, std::span<const std::size_t>(&zero, 1));
  out.vtm_logits = vtm_forward(b, out.cls);
  if (!mlm_positions.empty()) out.mlm_logits = mlm_forward(b, gather_rows(out.sequence, mlm_positions));
  return out;
}

Tensor FusionEncoder::vtm_forward(nn::Binding& b, const Tensor& fused_cls) const { return vtm_head_(b, fused_cls); }

Tensor FusionEncoder::mlm_forward(nn::Binding& b, const Tensor& states) const {
  return mlm_head_(b, mlm_norm_(b, states));
}

}  // namespace smaug::fusion
