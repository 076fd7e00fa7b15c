#pragma once

// CLS-attention token sparsification: keep the k most attended tokens and
// merge the rest into one token weighted by their attention.

#include <span>
#include <vector>

#include "smaug/diffcore/tensor.hpp"

namespace smaug::vit {

using diff::Tensor;

/// Token origin markers. Non-negative origins are patch indices.
inline constexpr long kClsOrigin = -1;
inline constexpr long kFusedOrigin = -2;

struct SparsifyTrace {
  /// 1-based encoder layer after which the step ran.
  std::size_t layer = 0;
  /// Positions among the non-CLS tokens entering the step, ascending.
  std::vector<std::size_t> attentive_idx;
  std::vector<std::size_t> inattentive_idx;
  /// ā at each inattentive position (same order as inattentive_idx).
  std::vector<double> fused_weights;
  /// Origins of the kept attentive tokens.
  std::vector<long> attentive_origin;
};

/// Mean over heads of the CLS row, excluding CLS itself. `attention` is
/// [h, n, n] (or [n, n] for one head) with softmax-normalised rows.
std::vector<double> cls_attention_mean(const Tensor& attention);
std::vector<double> cls_attention_mean(const std::vector<Tensor>& per_head);

/// max(1, floor(gamma * n)) for n non-CLS tokens.
std::size_t keep_count(std::size_t n, double gamma);

/// Positions of the k largest values (lower position wins ties), ascending.
std::vector<std::size_t> top_k_positions(std::span<const double> values, std::size_t k);

struct SparsifyResult {
  Tensor tokens;
  std::vector<long> origin;
  SparsifyTrace trace;
};

/// Keeps CLS and the attentive tokens in sequence order and appends the
/// fused token sum(a_i x_i) / sum(a_i) over the inattentive set. gamma = 1
/// and sequences shorter than 3 pass through unchanged. When the per-head
/// attention tensors that produced `abar` are given, the fusion coefficients
/// are taken from them so gradients reach the attention; otherwise `abar` is
/// used as a constant.
SparsifyResult sparsify(const Tensor& tokens, std::span<const double> abar, double gamma,
                        std::span<const long> origin, const std::vector<Tensor>* head_probs = nullptr);

}  // namespace smaug::vit
