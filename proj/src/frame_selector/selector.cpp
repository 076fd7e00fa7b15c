#include "smaug/frame_selector/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "smaug/diffcore/ops.hpp"
#include "smaug/vit_encoder/sparsify.hpp"

namespace smaug::selector {

using namespace diff;

FrameSelector::FrameSelector(SelectorConfig cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {
  in_ = {name_ + ".in", 2 * cfg_.dim, cfg_.dim};
  for (std::size_t l = 0; l < cfg_.blocks; ++l) {
    blocks_.push_back({name_ + ".block" + std::to_string(l), cfg_.dim, cfg_.heads, cfg_.hidden});
  }
  out_ = {name_ + ".out", cfg_.dim, 1};
}

void FrameSelector::init(nn::ParamStore& store, Rng& rng) const {
  in_.init(store, rng);
  for (const auto& blk : blocks_) blk.init(store, rng);
  out_.init(store, rng);
}

Tensor FrameSelector::score(nn::Binding& b, const Tensor& frame_cls, const Tensor& text_cls) const {
  if (frame_cls.rank() != 2 || frame_cls.dim(0) < 2) {
    throw ShapeError("frame selector: need at least 2 frames, got " + shape_str(frame_cls.shape()));
  }
  if (text_cls.rank() != 2 || text_cls.dim(0) != 1 || text_cls.dim(1) != frame_cls.dim(1)) {
    throw ShapeError("frame selector: text " + shape_str(text_cls.shape()) + " vs frames " +
                     shape_str(frame_cls.shape()));
  }
  const std::vector<std::size_t> rep(frame_cls.dim(0), 0);
  Tensor x = in_(b, concat({frame_cls, gather_rows(text_cls, rep)}, 1));
  for (const auto& blk : blocks_) x = blk(b, x).out;
  return out_(b, x);
}

namespace {

void check_scores(const Tensor& scores, std::size_t kappa) {
  const std::size_t k = scores.size();
  if (k < 2) throw std::invalid_argument("gumbel_topk_select: need at least 2 frames");
  if (kappa < 1 || kappa >= k) {
    throw std::invalid_argument("gumbel_topk_select: kappa " + std::to_string(kappa) + " outside [1, " +
                                std::to_string(k - 1) + "]");
  }
  std::size_t usable = 0;
  for (double s : scores.data()) {
    if (std::isnan(s) || s == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("gumbel_topk_select: non-finite score " + std::to_string(s));
    }
    usable += std::isfinite(s);
  }
  if (usable < kappa) throw std::invalid_argument("gumbel_topk_select: fewer finite scores than kappa");
}

}  // namespace

FrameSelection gumbel_topk_select(const Tensor& scores, std::size_t kappa, double tau, Rng* rng, Mode mode,
                                  const std::vector<double>* noise) {
  check_scores(scores, kappa);
  const std::size_t k = scores.size();
  FrameSelection sel;
  sel.mode = mode;
  if (mode == Mode::Infer) {
    sel.indices = vit::top_k_positions(scores.data(), kappa);
    std::vector<double> w(kappa * k, 0.0);
    for (std::size_t r = 0; r < kappa; ++r) w[r * k + sel.indices[r]] = 1.0;
    sel.weights = Tensor({kappa, k}, std::move(w));
    return sel;
  }
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_topk_select: temperature must be positive");
  if (noise && noise->size() != kappa * k) throw std::invalid_argument("gumbel_topk_select: noise size mismatch");
  if (!noise && !rng) throw std::invalid_argument("gumbel_topk_select: train mode needs an rng");

  const Tensor row = reshape(scores, {1, k});
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<bool> taken(k, false);
  std::vector<std::pair<std::size_t, Tensor>> rounds;
  for (std::size_t r = 0; r < kappa; ++r) {
    std::vector<double> g(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double gj = noise ? (*noise)[r * k + j] : rng->gumbel();
      g[j] = taken[j] ? neg_inf : gj;
    }
    const Tensor perturbed = add(row, Tensor({1, k}, g));
    std::size_t best = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (taken[j] || !std::isfinite(perturbed[j])) continue;
      if (best == k || perturbed[j] > perturbed[best]) best = j;
    }
    taken[best] = true;
    std::vector<double> hard(k, 0.0);
    hard[best] = 1.0;
    const Tensor soft = softmax(scale(perturbed, 1.0 / tau));
    rounds.emplace_back(best, straight_through(soft, Tensor({1, k}, std::move(hard))));
  }
  std::sort(rounds.begin(), rounds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Tensor> rows;
  for (auto& [idx, w] : rounds) {
    sel.indices.push_back(idx);
    rows.push_back(w);
  }
  sel.weights = concat(rows, 0);
  return sel;
}

Tensor apply_selection(const std::vector<Tensor>& frames, const FrameSelection& sel) {
  if (frames.empty()) throw std::invalid_argument("apply_selection: no frames");
  const Shape s = frames[0].shape();
  for (const auto& f : frames) {
    if (f.shape() != s) throw ShapeError("apply_selection: ragged frames");
  }
  if (sel.weights.dim(1) != frames.size()) {
    throw ShapeError("apply_selection: weights " + shape_str(sel.weights.shape()) + " for " +
                     std::to_string(frames.size()) + " frames");
  }
  if (sel.mode == Mode::Infer) {
    std::vector<Tensor> picked;
    for (auto i : sel.indices) picked.push_back(frames[i]);
    return picked.size() == 1 ? picked[0] : concat(picked, 0);
  }
  const std::size_t n = s.at(0), d = s.at(1);
  std::vector<Tensor> flat;
  for (const auto& f : frames) flat.push_back(reshape(f, {1, n * d}));
  const Tensor mixed = matmul(sel.weights, concat(flat, 0));
  return reshape(mixed, {sel.indices.size() * n, d});
}

}  // namespace smaug::selector
