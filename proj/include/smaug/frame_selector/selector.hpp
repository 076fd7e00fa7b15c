#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smaug/nn/layers.hpp"

namespace smaug::selector {

using diff::Tensor;

struct SelectorConfig {
  std::size_t blocks = 2;
  std::size_t heads = 2;
  std::size_t dim = 64;
  /// MLP hidden width of the selector blocks.
  std::size_t hidden = 256;
  std::size_t kappa = 2;
  double gumbel_tau = 1.0;
};

/// Text-conditioned frame scorer: concat(frame CLS, text CLS) -> linear ->
/// transformer blocks (no position embedding) -> linear -> one score per frame.
class FrameSelector {
 public:
  explicit FrameSelector(SelectorConfig cfg, std::string name = "sel");

  const SelectorConfig& config() const noexcept { return cfg_; }
  void init(nn::ParamStore& store, Rng& rng) const;
  /// frame_cls [K, d], text_cls [1, d] -> scores [K, 1].
  Tensor score(nn::Binding& b, const Tensor& frame_cls, const Tensor& text_cls) const;

 private:
  SelectorConfig cfg_;
  std::string name_;
  nn::Linear in_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::Linear out_;
};

enum class Mode { Train, Infer };

struct FrameSelection {
  /// Selected frame indices, ascending.
  std::vector<std::size_t> indices;
  /// [kappa, K] rows ordered like `indices`. Train: straight-through
  /// (forward hard one-hot, backward soft). Infer: constant one-hots.
  Tensor weights;
  Mode mode = Mode::Infer;
};

/// Train: kappa sequential Gumbel-softmax rounds without replacement. Infer:
/// top-kappa of the raw scores, lower index first on ties. `noise` overrides
/// the Gumbel draws (kappa x K values) when given. Scores may be -inf (never
/// chosen) but not NaN or +inf.
FrameSelection gumbel_topk_select(const Tensor& scores, std::size_t kappa, double tau, Rng* rng, Mode mode,
                                  const std::vector<double>* noise = nullptr);

/// Selected frame sequences concatenated along rows: [kappa * n, d].
Tensor apply_selection(const std::vector<Tensor>& frames, const FrameSelection& sel);

}  // namespace smaug::selector
