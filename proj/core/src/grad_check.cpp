#include "mlcld/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlcld/errors.hpp"

namespace mlcld {
namespace {

double checked(double v, const char* when) {
  if (!std::isfinite(v)) throw NumericalError(std::string("grad_check: non-finite loss ") + when);
  return v;
}

}  // namespace

GradCheckReport grad_check(const CheckedLoss& loss, std::span<Param* const> params, double h) {
  if (!(h > 0.0)) throw ParameterError("grad_check: step must be positive");

  checked(loss(true), "at the base point");
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& value = params[pi]->value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value.data()[k];
      value.data()[k] = saved + h;
      const double up = checked(loss(false), "at θ+h");
      value.data()[k] = saved - h;
      const double down = checked(loss(false), "at θ-h");
      value.data()[k] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].data()[k];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = pi;
        report.worst_index = k;
      }
      ++report.elements_checked;
    }
  }
  return report;
}

}  // namespace mlcld
