#pragma once

#include <functional>

#include "smaug/diffcore/tensor.hpp"

namespace smaug::diff {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  bool pass = true;
};

/// Options for the central-difference comparison. The per-coordinate relative
/// error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
struct GradCheckOptions {
  double step = 1e-5;
  double floor = 1e-3;
};

/// Compares the tape gradient of scalar `f` at `x` against central
/// differences, coordinate by coordinate. `f` must be deterministic.
GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double tol,
                                  GradCheckOptions opts = {});

}  // namespace smaug::diff
