#include "smaug/trainer/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "smaug/diffcore/tape.hpp"

namespace smaug::trainer {

namespace {

AdamWOptions adam_options(const TrainConfig& cfg) {
  AdamWOptions o;
  o.weight_decay = cfg.weight_decay;
  return o;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, std::vector<vidio::VideoTextPair> train)
    : model_(std::move(cfg)), train_(std::move(train)), optimizer_(adam_options(model_.config())) {
  if (train_.empty()) throw std::invalid_argument("trainer: empty training set");
  model_.init(params_, model_.config().seed);
}

Trainer::Trainer(const Checkpoint& ckpt, std::vector<vidio::VideoTextPair> train)
    : model_(parse_config(ckpt.config_text)),
      train_(std::move(train)),
      params_(ckpt.params),
      optimizer_(adam_options(model_.config())),
      step_(ckpt.step) {
  if (train_.empty()) throw std::invalid_argument("trainer: empty training set");
  optimizer_.moments() = ckpt.moments;
  nn::ParamStore fresh;
  model_.init(fresh, model_.config().seed);
  for (const auto& p : fresh.all()) {
    if (!params_.contains(p.name)) throw CheckpointError("checkpoint lacks parameter " + p.name);
  }
}

std::size_t Trainer::warm_start(const nn::ParamStore& source) {
  std::size_t copied = 0;
  for (const auto& p : source.all()) {
    if (params_.contains(p.name) && params_.get(p.name).value.shape() == p.value.shape()) {
      params_.set(p.name, p.value);
      ++copied;
    }
  }
  optimizer_.moments().clear();
  step_ = 0;
  return copied;
}

std::uint64_t Trainer::steps_per_epoch() const noexcept {
  const auto b = config().batch_size;
  return (train_.size() + b - 1) / b;
}

LrSchedule Trainer::schedule() const {
  LrSchedule s;
  s.base_lr = config().base_lr;
  s.min_lr = config().min_lr;
  s.warmup_steps =
      static_cast<std::size_t>(std::llround(config().warmup_epochs * static_cast<double>(steps_per_epoch())));
  s.total_steps = total_steps();
  return s;
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t step) const {
  const auto spe = steps_per_epoch();
  const auto epoch = step / spe;
  const auto b = step % spe;
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config().seed, "order", epoch);
  rng.shuffle(order);
  const std::size_t lo = b * config().batch_size;
  const std::size_t hi = std::min(order.size(), lo + config().batch_size);
  return {order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi)};
}

StepLog Trainer::train_step() {
  std::vector<const vidio::VideoTextPair*> batch;
  for (auto i : batch_indices(step_)) batch.push_back(&train_[i]);
  diff::Tape tape;
  nn::Binding b(params_, &tape);
  StepStreams streams(config().seed, step_);
  auto losses = model_.forward(b, batch, streams);
  StepLog log;
  log.step = step_;
  log.lr = schedule().lr_at(step_);
  log.vtc = losses.vtc.item();
  log.vtm = losses.vtm.item();
  log.mlm = losses.mlm.item();
  log.mvm = losses.mvm.item();
  log.total = losses.total.item();
  if (!std::isfinite(log.total)) {
    throw std::runtime_error("trainer: non-finite loss at step " + std::to_string(step_));
  }
  auto grads = tape.backward(losses.total);
  std::map<std::string, diff::Tensor> g;
  for (const auto& [name, leaf] : b.bound()) {
    if (grads.reached(leaf)) g.emplace(name, grads.grad(leaf));
  }
  optimizer_.step(params_, g, log.lr);
  ++step_;
  return log;
}

std::vector<StepLog> Trainer::run(std::uint64_t max_steps, const std::function<void(const StepLog&)>& on_step) {
  std::vector<StepLog> logs;
  const auto end = total_steps();
  for (std::uint64_t n = 0; n < max_steps && step_ < end; ++n) {
    logs.push_back(train_step());
    if (on_step) on_step(logs.back());
  }
  return logs;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.seed = config().seed;
  c.step = step_;
  c.config_text = to_text(config());
  c.params = params_;
  c.moments = optimizer_.moments();
  return c;
}

}  // namespace smaug::trainer
