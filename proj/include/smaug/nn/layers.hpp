#pragma once

// Transformer building blocks shared by every submodel. Each layer is a
// light descriptor (name prefix + dimensions); parameters live in a
// ParamStore under "<prefix>.<field>".

#include <string>
#include <vector>

#include "smaug/nn/params.hpp"

namespace smaug::nn {

struct Linear {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;

  void init(ParamStore& store, Rng& rng) const;
  Tensor operator()(Binding& b, const Tensor& x) const;
};

struct LayerNorm {
  std::string name;
  std::size_t dim = 0;

  void init(ParamStore& store) const;
  Tensor operator()(Binding& b, const Tensor& x) const;
};

struct AttentionResult {
  Tensor out;
  /// Per-head attention probabilities [n_q, n_kv]; filled only on request.
  std::vector<Tensor> probs;
};

/// Multi-head attention. Queries come from `q_src`, keys and values from `kv_src`
/// (the same tensor for self-attention).
struct MultiHeadAttention {
  std::string name;
  std::size_t dim = 0;
  std::size_t heads = 1;

  void init(ParamStore& store, Rng& rng) const;
  AttentionResult operator()(Binding& b, const Tensor& q_src, const Tensor& kv_src, bool keep_probs = false) const;
};

struct Mlp {
  std::string name;
  std::size_t dim = 0;
  std::size_t hidden = 0;

  void init(ParamStore& store, Rng& rng) const;
  Tensor operator()(Binding& b, const Tensor& x) const;
};

/// Pre-norm block: x + attn(ln1(x)); x + mlp(ln2(x)).
struct TransformerBlock {
  std::string name;
  std::size_t dim = 0;
  std::size_t heads = 1;
  std::size_t hidden = 0;

  void init(ParamStore& store, Rng& rng) const;
  AttentionResult operator()(Binding& b, const Tensor& x, bool keep_probs = false) const;
};

/// Pre-norm fusion block: self-attention over x, cross-attention from x to
/// `context`, then MLP, each with a residual.
struct CrossAttentionBlock {
  std::string name;
  std::size_t dim = 0;
  std::size_t heads = 1;
  std::size_t hidden = 0;

  void init(ParamStore& store, Rng& rng) const;
  Tensor operator()(Binding& b, const Tensor& x, const Tensor& context) const;
};

}  // namespace smaug::nn
