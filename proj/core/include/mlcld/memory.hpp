#pragma once

#include <cstddef>

#include "mlcld/matrix.hpp"

namespace mlcld::memory {

/// Aligned, immutable copy of the queue contents, oldest row first.
struct QueueSnapshot {
  Matrix z;  ///< len × e key embeddings
  Matrix y;  ///< len × c logical labels
  Matrix d;  ///< len × c label distributions

  std::size_t size() const noexcept { return z.rows(); }
};

/// Three index-aligned FIFO ring buffers: key embeddings, logical labels and
/// label distributions. Slot i of each buffer always holds the same sample.
class QueueSet {
 public:
  /// Stored rows must satisfy these within this tolerance: unit-norm z,
  /// simplex d, binary y.
  static constexpr double kRowTolerance = 1e-6;

  QueueSet(std::size_t capacity, std::size_t embed_dim, std::size_t num_labels);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return len_; }
  bool empty() const noexcept { return len_ == 0; }
  std::size_t embed_dim() const noexcept { return z_.cols(); }
  std::size_t num_labels() const noexcept { return y_.cols(); }

  /// Appends b rows in order, overwriting the oldest when full. The whole
  /// batch is validated before anything is written; a bad row throws
  /// QueueRejectError and leaves the queue unchanged.
  void enqueue_batch(const Matrix& z, const Matrix& y, const Matrix& d);

  QueueSnapshot snapshot() const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  ///< next write slot
  std::size_t len_ = 0;
  Matrix z_, y_, d_;
};

}  // namespace mlcld::memory
