#pragma once

#include <cstddef>

namespace smaug::trainer {

/// Linear warmup from 0 to base_lr, then cosine decay reaching min_lr at the
/// last step (total_steps - 1).
struct LrSchedule {
  double base_lr = 1e-4;
  double min_lr = 1e-6;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  double lr_at(std::size_t step) const;
};

}  // namespace smaug::trainer
