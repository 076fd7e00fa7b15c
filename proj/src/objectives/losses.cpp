#include "smaug/objectives/losses.hpp"

#include <numeric>
#include <stdexcept>
#include <vector>

#include "smaug/diffcore/ops.hpp"

namespace smaug::objectives {

using namespace diff;

VtcParts vtc_from_similarity(const Tensor& sim, double tau) {
  if (sim.rank() != 2 || sim.dim(0) != sim.dim(1)) {
    throw ShapeError("vtc: similarity must be square, got " + shape_str(sim.shape()));
  }
  if (!(tau > 0.0)) throw std::invalid_argument("vtc: temperature must be positive");
  std::vector<std::size_t> diag(sim.dim(0));
  std::iota(diag.begin(), diag.end(), 0);
  const Tensor logits = scale(sim, 1.0 / tau);
  VtcParts p;
  p.v2t = cross_entropy(logits, diag);
  p.t2v = cross_entropy(transpose(logits), diag);
  p.loss = scale(add(p.v2t, p.t2v), 0.5);
  return p;
}

Tensor cosine_similarity(const Tensor& video_proj, const Tensor& text_proj) {
  return matmul(l2_normalize_rows(video_proj), transpose(l2_normalize_rows(text_proj)));
}

VtcParts vtc_parts(const Tensor& video_proj, const Tensor& text_proj, double tau) {
  if (video_proj.rank() != 2 || video_proj.shape() != text_proj.shape()) {
    throw ShapeError("vtc: video " + shape_str(video_proj.shape()) + " vs text " + shape_str(text_proj.shape()));
  }
  return vtc_from_similarity(cosine_similarity(video_proj, text_proj), tau);
}

Tensor vtc_loss(const Tensor& video_proj, const Tensor& text_proj, double tau) {
  return vtc_parts(video_proj, text_proj, tau).loss;
}

Tensor vtm_loss(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(1) != 2) throw ShapeError("vtm: logits must be [N, 2], got " + shape_str(logits.shape()));
  for (auto l : labels) {
    if (l > 1) throw std::invalid_argument("vtm: label " + std::to_string(l) + " not in {0, 1}");
  }
  return cross_entropy(logits, labels);
}

Tensor mlm_loss(const Tensor& logits, std::span<const std::size_t> targets) {
  if (targets.empty()) return Tensor::scalar(0.0);
  return cross_entropy(logits, targets);
}

LossBundle total_loss(Tensor vtc, Tensor vtm, Tensor mlm, Tensor mvm) {
  LossBundle b{std::move(vtc), std::move(vtm), std::move(mlm), std::move(mvm), {}};
  b.total = add(add(add(b.vtc, b.vtm), b.mlm), b.mvm);
  return b;
}

}  // namespace smaug::objectives
