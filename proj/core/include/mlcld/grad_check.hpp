#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "mlcld/matrix.hpp"

namespace mlcld {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::size_t elements_checked = 0;
};

/// Loss evaluated at the current parameter values. When `with_grad` is
/// true the callee must also leave d(loss)/d(param) in every Param::grad
/// (zeroing first).
using CheckedLoss = std::function<double(bool with_grad)>;

/// Compares analytic gradients to central differences
/// (f(θ+h) − f(θ−h)) / 2h, element by element over every param. The
/// relative error per element is |a − n| / max(|a|, |n|, 1e-8). Parameter
/// values are restored on return. Throws NumericalError if any evaluation is
/// non-finite.
GradCheckReport grad_check(const CheckedLoss& loss, std::span<Param* const> params,
                           double h = 1e-5);

}  // namespace mlcld
