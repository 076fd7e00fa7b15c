#include "smaug/diffcore/gradcheck.hpp"

#include <cmath>

#include "smaug/diffcore/tape.hpp"

namespace smaug::diff {

GradCheckReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double tol,
                                  GradCheckOptions opts) {
  Tape tape;
  Tensor leaf = tape.leaf(x);
  Tensor loss = f(leaf);
  std::vector<double> analytic(x.size(), 0.0);
  if (loss.tape() == &tape) {
    analytic = tape.backward(loss).grad(leaf).to_vector();
  }

  GradCheckReport report;
  report.coordinates = x.size();
  std::vector<double> probe = x.to_vector();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + opts.step;
    const double fp = f(Tensor(x.shape(), probe)).item();
    probe[i] = orig - opts.step;
    const double fm = f(Tensor(x.shape(), probe)).item();
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * opts.step);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opts.floor});
    const double rel = abs_err / denom;
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel > report.max_rel_error || std::isnan(rel)) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace smaug::diff
