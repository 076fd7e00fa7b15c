#include "smaug/trainer/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace smaug::trainer {

void AdamW::step(nn::ParamStore& store, const std::map<std::string, diff::Tensor>& grads, double lr) {
  for (const auto& [name, g] : grads) {
    const auto& p = store.get(name);
    if (g.shape() != p.value.shape()) {
      throw diff::ShapeError("optimizer: gradient for " + name + " has shape " + diff::shape_str(g.shape()));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw std::runtime_error("optimizer: non-finite gradient in " + name + " at index " + std::to_string(i) +
                                 "; step aborted");
      }
    }
  }
  for (const auto& [name, g] : grads) {
    const auto& p = store.get(name);
    auto& mom = moments_[name];
    if (mom.m.empty()) {
      mom.m.assign(g.size(), 0.0);
      mom.v.assign(g.size(), 0.0);
    }
    ++mom.t;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(mom.t));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(mom.t));
    const double decay = p.decay ? opts_.weight_decay : 0.0;
    std::vector<double> w = p.value.to_vector();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.m[i] = opts_.beta1 * mom.m[i] + (1.0 - opts_.beta1) * g[i];
      mom.v[i] = opts_.beta2 * mom.v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      w[i] -= lr * decay * w[i];
      w[i] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
    store.set(name, diff::Tensor(p.value.shape(), std::move(w)));
  }
}

}  // namespace smaug::trainer
