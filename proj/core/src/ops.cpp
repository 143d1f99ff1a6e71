#include "mlcld/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mlcld/errors.hpp"

namespace mlcld::ops {
namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                         b.shape_string() + " do not conform");
  }
}

void require_rate(double rate, const char* op) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ParameterError(std::string(op) + ": rate must lie in [0, 1], got " +
                         std::to_string(rate));
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.data() + i * m;
    const double* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    const double* bi = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "hadamard", a, b);
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  require(x.cols() == w.rows(), "affine", x, w);
  require(b.rows() == 1 && b.cols() == w.cols(), "affine bias", w, b);
  Matrix y = matmul(x, w);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
  }
  return y;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy) {
  AffineGrads g{Matrix(x.rows(), x.cols()), Matrix(w.rows(), w.cols()), Matrix(1, w.cols())};
  affine_backward_accumulate(x, w, dy, &g.dx, g.dw, g.db);
  return g;
}

void affine_backward_accumulate(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix* dx,
                                Matrix& dw, Matrix& db) {
  require(dy.rows() == x.rows() && dy.cols() == w.cols(), "affine_backward", x, dy);
  require(dw.same_shape(w), "affine_backward dW", dw, w);
  require(db.rows() == 1 && db.cols() == w.cols(), "affine_backward db", db, w);
  dw += matmul_tn(x, dy);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const auto r = dy.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) db(0, j) += r[j];
  }
  if (dx) *dx = matmul_nt(dy, w);
}

Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.flat()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
  require(x.same_shape(dy), "relu_backward", x, dy);
  Matrix dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(x.data()[i] > 0.0)) dx.data()[i] = 0.0;
  return dx;
}

Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.row(i);
    auto out = y.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      s += out[j];
    }
    for (double& v : out) v /= s;
  }
  return y;
}

Matrix row_softmax_backward(const Matrix& y, const Matrix& dy) {
  require(y.same_shape(dy), "row_softmax_backward", y, dy);
  Matrix dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const auto yr = y.row(i);
    const auto gr = dy.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
    auto out = dx.row(i);
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
  }
  return dx;
}

Matrix row_l2_normalize(const Matrix& x) {
  Matrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    double s = 0.0;
    for (double v : r) s += v * v;
    const double norm = std::sqrt(s);
    if (!(norm >= kMinRowNorm)) {
      throw DegenerateInputError("row_l2_normalize: row " + std::to_string(i) +
                                 " has near-zero norm");
    }
    for (double& v : r) v /= norm;
  }
  return y;
}

Matrix row_l2_normalize_backward(const Matrix& x, const Matrix& y, const Matrix& dy) {
  require(x.same_shape(y) && x.same_shape(dy), "row_l2_normalize_backward", x, dy);
  Matrix dx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xr = x.row(i);
    const auto yr = y.row(i);
    const auto gr = dy.row(i);
    double s = 0.0, dot = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) {
      s += xr[j] * xr[j];
      dot += yr[j] * gr[j];
    }
    const double inv = 1.0 / std::sqrt(s);
    auto out = dx.row(i);
    for (std::size_t j = 0; j < xr.size(); ++j) out[j] = (gr[j] - yr[j] * dot) * inv;
  }
  return dx;
}

Masked bernoulli_mask(const Matrix& x, double rate, Rng& rng) {
  require_rate(rate, "bernoulli_mask");
  Masked m{x, Matrix(x.rows(), x.cols(), 1.0)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.bernoulli(rate)) {
      m.values.data()[i] = 0.0;
      m.mask.data()[i] = 0.0;
    }
  }
  return m;
}

Masked dropout(const Matrix& x, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Masked m{x, Matrix(x.rows(), x.cols(), keep_scale)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.bernoulli(rate)) m.mask.data()[i] = 0.0;
    m.values.data()[i] *= m.mask.data()[i];
  }
  return m;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.flat()) v = sigmoid(v);
  return y;
}

}  // namespace mlcld::ops
