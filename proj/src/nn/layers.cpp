#include "smaug/nn/layers.hpp"

#include <cmath>

#include "smaug/diffcore/ops.hpp"

namespace smaug::nn {

using namespace diff;

void Linear::init(ParamStore& store, Rng& rng) const {
  store.add(name + ".w", normal_init(rng, {in, out}, 1.0 / std::sqrt(static_cast<double>(in))), true);
  if (bias) store.add(name + ".b", Tensor::zeros({out}), false);
}

Tensor Linear::operator()(Binding& b, const Tensor& x) const {
  Tensor y = matmul(x, b(name + ".w"));
  return bias ? add_row(y, b(name + ".b")) : y;
}

void LayerNorm::init(ParamStore& store) const {
  store.add(name + ".gamma", Tensor::full({dim}, 1.0), false);
  store.add(name + ".beta", Tensor::zeros({dim}), false);
}

Tensor LayerNorm::operator()(Binding& b, const Tensor& x) const {
  return layernorm(x, b(name + ".gamma"), b(name + ".beta"));
}

void MultiHeadAttention::init(ParamStore& store, Rng& rng) const {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument(name + ": dim " + std::to_string(dim) + " not divisible by heads " +
                                std::to_string(heads));
  }
  for (const char* p : {".q", ".k", ".v", ".o"}) Linear{name + p, dim, dim}.init(store, rng);
}

AttentionResult MultiHeadAttention::operator()(Binding& b, const Tensor& q_src, const Tensor& kv_src,
                                               bool keep_probs) const {
  const Tensor q = Linear{name + ".q", dim, dim}(b, q_src);
  const Tensor k = Linear{name + ".k", dim, dim}(b, kv_src);
  const Tensor v = Linear{name + ".v", dim, dim}(b, kv_src);
  const std::size_t dh = dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  AttentionResult r;
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor a = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
    outs.push_back(matmul(a, vh));
    if (keep_probs) r.probs.push_back(a);
  }
  Tensor merged = heads == 1 ? outs.front() : concat(outs, 1);
  r.out = Linear{name + ".o", dim, dim}(b, merged);
  return r;
}

void Mlp::init(ParamStore& store, Rng& rng) const {
  Linear{name + ".fc1", dim, hidden}.init(store, rng);
  Linear{name + ".fc2", hidden, dim}.init(store, rng);
}

Tensor Mlp::operator()(Binding& b, const Tensor& x) const {
  return Linear{name + ".fc2", hidden, dim}(b, gelu(Linear{name + ".fc1", dim, hidden}(b, x)));
}

void TransformerBlock::init(ParamStore& store, Rng& rng) const {
  LayerNorm{name + ".ln1", dim}.init(store);
  MultiHeadAttention{name + ".attn", dim, heads}.init(store, rng);
  LayerNorm{name + ".ln2", dim}.init(store);
  Mlp{name + ".mlp", dim, hidden}.init(store, rng);
}

AttentionResult TransformerBlock::operator()(Binding& b, const Tensor& x, bool keep_probs) const {
  Tensor h = LayerNorm{name + ".ln1", dim}(b, x);
  AttentionResult att = MultiHeadAttention{name + ".attn", dim, heads}(b, h, h, keep_probs);
  Tensor y = add(x, att.out);
  y = add(y, Mlp{name + ".mlp", dim, hidden}(b, LayerNorm{name + ".ln2", dim}(b, y)));
  att.out = y;
  return att;
}

void CrossAttentionBlock::init(ParamStore& store, Rng& rng) const {
  LayerNorm{name + ".ln1", dim}.init(store);
  MultiHeadAttention{name + ".self", dim, heads}.init(store, rng);
  LayerNorm{name + ".ln2", dim}.init(store);
  MultiHeadAttention{name + ".cross", dim, heads}.init(store, rng);
  LayerNorm{name + ".ln3", dim}.init(store);
  Mlp{name + ".mlp", dim, hidden}.init(store, rng);
}

Tensor CrossAttentionBlock::operator()(Binding& b, const Tensor& x, const Tensor& context) const {
  if (context.rank() != 2 || context.dim(1) != dim) {
    throw ShapeError(name + ": context shape " + shape_str(context.shape()) + " vs model dim " +
                     std::to_string(dim));
  }
  Tensor h = LayerNorm{name + ".ln1", dim}(b, x);
  Tensor y = add(x, MultiHeadAttention{name + ".self", dim, heads}(b, h, h).out);
  Tensor hq = LayerNorm{name + ".ln2", dim}(b, y);
  y = add(y, MultiHeadAttention{name + ".cross", dim, heads}(b, hq, context).out);
  y = add(y, Mlp{name + ".mlp", dim, hidden}(b, LayerNorm{name + ".ln3", dim}(b, y)));
  return y;
}

}  // namespace smaug::nn
