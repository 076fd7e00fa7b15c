#pragma once

#include <map>
#include <string>
#include <vector>

#include "smaug/nn/params.hpp"

namespace smaug::trainer {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.02;
};

struct Moments {
  std::vector<double> m;
  std::vector<double> v;
  /// Number of updates applied to this parameter.
  std::uint64_t t = 0;
};

/// AdamW with decoupled weight decay, skipped for parameters flagged
/// decay = false. Parameters absent from `grads` are left untouched.
class AdamW {
 public:
  explicit AdamW(AdamWOptions opts = {}) : opts_(opts) {}

  const AdamWOptions& options() const noexcept { return opts_; }
  /// Throws before touching any state when a gradient is not finite.
  void step(nn::ParamStore& store, const std::map<std::string, diff::Tensor>& grads, double lr);

  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }
  std::map<std::string, Moments>& moments() noexcept { return moments_; }

 private:
  AdamWOptions opts_;
  std::map<std::string, Moments> moments_;
};

}  // namespace smaug::trainer
