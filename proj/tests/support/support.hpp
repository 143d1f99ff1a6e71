#pragma once
#include <cmath>

#include <functional>
#include <vector>

#include "mlcld/grad_check.hpp"
#include "mlcld/matrix.hpp"
#include "mlcld/rng.hpp"

namespace mlcld::test {

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.uniform(lo, hi);
  return m;
}

inline Matrix random_binary(Rng& rng, std::size_t r, std::size_t c, double p = 0.4) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return m;
}

/// Row-stochastic matrix with strictly positive entries.
inline Matrix random_simplex(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m = random_matrix(rng, r, c, 0.05, 1.0);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    for (double& v : m.row(i)) v /= s;
  }
  return m;
}

inline Matrix random_unit_rows(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m = random_matrix(rng, r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v * v;
    s = std::sqrt(s);
    for (double& v : m.row(i)) v /= s;
  }
  return m;
}

/// Max relative error of a unary op's backward against central differences
/// of L = Σ f(x) ⊙ R for a random R.
inline double unary_backward_error(const std::function<Matrix(const Matrix&)>& f,
                                   const std::function<Matrix(const Matrix&, const Matrix&)>& back,
                                   const Matrix& x0, Rng& rng) {
  Param x(x0);
  const Matrix y0 = f(x0);
  const Matrix r = random_matrix(rng, y0.rows(), y0.cols());
  auto loss = [&](bool with_grad) {
    const Matrix y = f(x.value);
    double l = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) l += y.data()[k] * r.data()[k];
    if (with_grad) x.grad = back(x.value, r);
    return l;
  };
  Param* ps[] = {&x};
  return grad_check(loss, ps).max_rel_error;
}

}  // namespace mlcld::test
