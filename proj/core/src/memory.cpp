#include "mlcld/memory.hpp"

#include <algorithm>
#include <cmath>

#include "mlcld/errors.hpp"

namespace mlcld::memory {
namespace {

void check_rows(const Matrix& z, const Matrix& y, const Matrix& d) {
  constexpr double tol = QueueSet::kRowTolerance;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double norm2 = 0.0;
    for (double v : z.row(i)) {
      if (!std::isfinite(v)) throw QueueRejectError("enqueue: non-finite embedding");
      norm2 += v * v;
    }
    if (std::abs(std::sqrt(norm2) - 1.0) > tol) {
      throw QueueRejectError("enqueue: embedding row " + std::to_string(i) + " is not unit norm");
    }
    for (double v : y.row(i)) {
      if (v != 0.0 && v != 1.0) throw QueueRejectError("enqueue: label row is not binary");
    }
    double mass = 0.0;
    for (double v : d.row(i)) {
      if (!(v >= -tol) || !std::isfinite(v)) {
        throw QueueRejectError("enqueue: distribution row has a negative entry");
      }
      mass += v;
    }
    if (std::abs(mass - 1.0) > tol) {
      throw QueueRejectError("enqueue: distribution row " + std::to_string(i) + " sums to " +
                             std::to_string(mass));
    }
  }
}

}  // namespace

QueueSet::QueueSet(std::size_t capacity, std::size_t embed_dim, std::size_t num_labels)
    : capacity_(capacity),
      z_(capacity, embed_dim),
      y_(capacity, num_labels),
      d_(capacity, num_labels) {
  if (capacity == 0) throw ParameterError("queue capacity must be >= 1");
}

void QueueSet::enqueue_batch(const Matrix& z, const Matrix& y, const Matrix& d) {
  const std::size_t b = z.rows();
  if (y.rows() != b || d.rows() != b || z.cols() != z_.cols() || y.cols() != y_.cols() ||
      d.cols() != d_.cols()) {
    throw DimensionError("enqueue: batch shapes do not match the queue");
  }
  if (b > capacity_) throw QueueRejectError("enqueue: batch larger than queue capacity");
  check_rows(z, y, d);

  for (std::size_t i = 0; i < b; ++i) {
    std::copy(z.row(i).begin(), z.row(i).end(), z_.row(head_).begin());
    std::copy(y.row(i).begin(), y.row(i).end(), y_.row(head_).begin());
    std::copy(d.row(i).begin(), d.row(i).end(), d_.row(head_).begin());
    head_ = (head_ + 1) % capacity_;
  }
  len_ = std::min(capacity_, len_ + b);
}

QueueSnapshot QueueSet::snapshot() const {
  std::vector<std::size_t> order(len_);
  const std::size_t oldest = (head_ + capacity_ - len_) % capacity_;
  for (std::size_t i = 0; i < len_; ++i) order[i] = (oldest + i) % capacity_;
  return {z_.gather_rows(order), y_.gather_rows(order), d_.gather_rows(order)};
}

}  // namespace mlcld::memory
