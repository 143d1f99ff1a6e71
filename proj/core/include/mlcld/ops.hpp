#pragma once

// Dense kernels with their vector-Jacobian products. Each forward op is a
// pure function; the matching `*_backward` maps the upstream gradient of the
// op's output to gradients of its inputs.

#include "mlcld/matrix.hpp"
#include "mlcld/rng.hpp"

namespace mlcld::ops {

/// A·B.
Matrix matmul(const Matrix& a, const Matrix& b);
/// Aᵀ·B.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// A·Bᵀ.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);

/// Y = X·W + b, with b (1×cols) broadcast over rows.
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b);

struct AffineGrads {
  Matrix dx;
  Matrix dw;
  Matrix db;
};
AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy);

/// Accumulating variant used by the model: adds into `dw` and `db`, and
/// writes dX into `dx` unless it is null.
void affine_backward_accumulate(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix* dx,
                                Matrix& dw, Matrix& db);

Matrix relu(const Matrix& x);
/// Passes dY where x > 0. The subgradient at exactly 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& dy);

/// Per-row softmax with max subtraction.
Matrix row_softmax(const Matrix& x);
/// `y` is the forward output.
Matrix row_softmax_backward(const Matrix& y, const Matrix& dy);

/// Rows of norm below this are rejected by row_l2_normalize.
inline constexpr double kMinRowNorm = 1e-12;

/// Divides every row by its Euclidean norm; throws DegenerateInputError on a
/// near-zero row.
Matrix row_l2_normalize(const Matrix& x);
/// `x` is the forward input, `y` the forward output.
Matrix row_l2_normalize_backward(const Matrix& x, const Matrix& y, const Matrix& dy);

struct Masked {
  Matrix values;
  Matrix mask;  ///< multiplier applied elementwise; backward is dY ⊙ mask
};

/// Zeroes each element independently with probability `rate`. Survivors are
/// not rescaled (augmentation, not dropout).
Masked bernoulli_mask(const Matrix& x, double rate, Rng& rng);

/// Inverted dropout: survivors are scaled by 1/(1-rate).
Masked dropout(const Matrix& x, double rate, Rng& rng);

double sigmoid(double x);
Matrix sigmoid(const Matrix& x);

}  // namespace mlcld::ops
