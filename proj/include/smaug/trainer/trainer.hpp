#pragma once

#include <functional>
#include <vector>

#include "smaug/trainer/checkpoint.hpp"
#include "smaug/trainer/model.hpp"
#include "smaug/trainer/optimizer.hpp"
#include "smaug/trainer/schedule.hpp"

namespace smaug::trainer {

struct StepLog {
  std::uint64_t step = 0;
  double lr = 0.0;
  double vtc = 0.0;
  double vtm = 0.0;
  double mlm = 0.0;
  double mvm = 0.0;
  double total = 0.0;
};

/// Owns parameters and optimizer state for one pre-training run. The data
/// order and every random stream are functions of (seed, step), so a run
/// resumed from a checkpoint continues exactly as the uninterrupted one.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<vidio::VideoTextPair> train);
  /// Resumes from `ckpt`; its stored configuration is used.
  Trainer(const Checkpoint& ckpt, std::vector<vidio::VideoTextPair> train);

  /// Copies every parameter of `source` whose name and shape match; returns
  /// how many were copied. Optimizer state and step are reset.
  std::size_t warm_start(const nn::ParamStore& source);

  const SmaugModel& model() const noexcept { return model_; }
  const TrainConfig& config() const noexcept { return model_.config(); }
  const nn::ParamStore& params() const noexcept { return params_; }
  nn::ParamStore& params() noexcept { return params_; }
  std::uint64_t step() const noexcept { return step_; }
  std::uint64_t steps_per_epoch() const noexcept;
  std::uint64_t total_steps() const noexcept { return steps_per_epoch() * config().epochs; }
  LrSchedule schedule() const;

  /// Indices into the training set for global step `step`.
  std::vector<std::size_t> batch_indices(std::uint64_t step) const;

  StepLog train_step();
  /// Runs until total_steps() or `max_steps` more steps, whichever is first.
  std::vector<StepLog> run(std::uint64_t max_steps = ~std::uint64_t{0},
                           const std::function<void(const StepLog&)>& on_step = {});

  Checkpoint checkpoint() const;

 private:
  SmaugModel model_;
  std::vector<vidio::VideoTextPair> train_;
  nn::ParamStore params_;
  AdamW optimizer_;
  std::uint64_t step_ = 0;
};

}  // namespace smaug::trainer
