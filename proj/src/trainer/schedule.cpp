#include "smaug/trainer/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smaug::trainer {

double LrSchedule::lr_at(std::size_t step) const {
  if (step < warmup_steps) return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  const std::size_t last = total_steps == 0 ? 0 : total_steps - 1;
  if (step == warmup_steps || last <= warmup_steps) return base_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(last - warmup_steps));
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace smaug::trainer
