#include "smaug/diffcore/tape.hpp"

namespace smaug::diff {

GradBuffers::GradBuffers(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)), buffers_(sizes_.size()) {}

std::vector<double>& GradBuffers::at(NodeId id) {
  auto& b = buffers_.at(id);
  if (b.empty()) b.assign(sizes_[id], 0.0);
  return b;
}

Tensor Tape::leaf(const Tensor& value) {
  if (!value.defined()) throw std::invalid_argument("tape leaf: undefined tensor");
  if (consumed_) throw std::logic_error("tape leaf: tape already consumed by backward");
  Tensor t = value.detach();
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back({value.size(), {}});
  return t;
}

Tensor Tape::record(Shape shape, std::vector<double> data, BackwardFn fn) {
  if (consumed_) throw std::logic_error("tape record: tape already consumed by backward");
  Tensor t(std::move(shape), std::move(data));
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back({t.size(), std::move(fn)});
  return t;
}

GradMap Tape::backward(const Tensor& loss) {
  if (consumed_) throw std::logic_error("backward: tape already consumed");
  if (nodes_.empty()) throw std::logic_error("backward: empty tape");
  if (loss.size() != 1) throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  if (loss.tape() != this) throw std::invalid_argument("backward: loss does not live on this tape");

  std::vector<std::size_t> sizes;
  sizes.reserve(nodes_.size());
  for (const auto& n : nodes_) sizes.push_back(n.numel);
  GradBuffers grads(std::move(sizes));
  const NodeId root = *loss.node();
  grads.at(root)[0] = 1.0;

  for (NodeId id = root + 1; id-- > 0;) {
    auto& node = nodes_[id];
    // Nodes never accumulated into are unreachable from the loss.
    if (!node.backward || !grads.allocated(id)) continue;
    node.backward(grads.at(id), grads);
    node.backward = nullptr;  // release saved activations
  }
  consumed_ = true;
  return GradMap(this, grads.release());
}

Tensor GradMap::grad(const Tensor& t) const {
  if (t.tape() != tape_ || !t.node()) return Tensor::zeros(t.shape());
  const auto& g = grads_.at(*t.node());
  if (g.empty()) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), g);
}

bool GradMap::reached(const Tensor& t) const {
  return t.tape() == tape_ && t.node() && !grads_.at(*t.node()).empty();
}

}  // namespace smaug::diff
