#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smaug/common/rng.hpp"
#include "smaug/diffcore/tape.hpp"
#include "smaug/diffcore/tensor.hpp"

namespace smaug::nn {

using diff::Tensor;

struct Parameter {
  std::string name;
  Tensor value;
  bool decay = true;  // false for layernorm and bias parameters
};

/// Named, insertion-ordered parameter set shared by all submodels.
class ParamStore {
 public:
  void add(std::string name, Tensor init, bool decay);
  bool contains(std::string_view name) const;
  const Parameter& get(std::string_view name) const;
  void set(std::string_view name, Tensor value);

  const std::vector<Parameter>& all() const noexcept { return params_; }
  std::vector<Parameter>& all() noexcept { return params_; }
  /// Total scalar count, optionally restricted to names with `prefix`.
  std::size_t scalar_count(std::string_view prefix = {}) const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Resolves parameter names for one forward pass. With a tape each
/// parameter becomes a leaf once; without one the raw values are used.
class Binding {
 public:
  Binding(const ParamStore& store, diff::Tape* tape) : store_(&store), tape_(tape) {}

  Tensor operator()(std::string_view name);
  /// Substitutes `value` for a stored parameter in this pass.
  void bind(std::string_view name, const Tensor& value);
  diff::Tape* tape() const noexcept { return tape_; }
  const ParamStore& store() const noexcept { return *store_; }
  const std::map<std::string, Tensor, std::less<>>& bound() const noexcept { return bound_; }
  /// Wraps an input tensor as a leaf when recording, otherwise returns it.
  Tensor input(const Tensor& value) const { return tape_ ? tape_->leaf(value) : value; }

 private:
  const ParamStore* store_;
  diff::Tape* tape_;
  std::map<std::string, Tensor, std::less<>> bound_;
};

// Initialisers.
Tensor normal_init(Rng& rng, diff::Shape shape, double stddev);

}  // namespace smaug::nn
