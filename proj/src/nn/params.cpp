#include "smaug/nn/params.hpp"

#include <stdexcept>

namespace smaug::nn {

void ParamStore::add(std::string name, Tensor init, bool decay) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), init.detach(), decay});
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const Parameter& ParamStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return params_[it->second];
}

void ParamStore::set(std::string_view name, Tensor value) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  auto& p = params_[it->second];
  if (p.value.shape() != value.shape()) {
    throw diff::ShapeError("parameter " + p.name + ": shape " + diff::shape_str(p.value.shape()) + " vs " +
                           diff::shape_str(value.shape()));
  }
  p.value = value.detach();
}

std::size_t ParamStore::scalar_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) n += p.value.size();
  }
  return n;
}

Tensor Binding::operator()(std::string_view name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  if (!tape_) return store_->get(name).value;
  Tensor leaf = tape_->leaf(store_->get(name).value);
  bound_.emplace(std::string(name), leaf);
  return leaf;
}

void Binding::bind(std::string_view name, const Tensor& value) {
  const auto& p = store_->get(name);
  if (p.value.shape() != value.shape()) {
    throw diff::ShapeError("bind " + p.name + ": shape " + diff::shape_str(p.value.shape()) + " vs " +
                           diff::shape_str(value.shape()));
  }
  bound_.insert_or_assign(std::string(name), value);
}

Tensor normal_init(Rng& rng, diff::Shape shape, double stddev) {
  std::vector<double> v(diff::shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace smaug::nn
