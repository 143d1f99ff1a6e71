#pragma once

// Contrastive and label-distribution objectives with hand-derived gradients.
//
// Every anchor i in a batch is scored against a shared candidate set A(i):
// the key embeddings of the current batch (row r is the key of anchor r)
// followed by the queue snapshot. Similarities are z_i·k_a/τ on unit rows,
// and log p_{i,a} is their log-softmax over A(i).
//
// Gradients are returned with respect to the anchor embeddings z, the live
// batch distributions d, and the head weight W. Candidate embeddings and
// queue rows are constants.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mlcld/matrix.hpp"
#include "mlcld/memory.hpp"

namespace mlcld::objectives {

enum class PositiveMode { all, any };
enum class LossMode { mulsupcon, rld, cld };
enum class Reduction { sum, mean };

struct Hyper {
  double tau = 0.1;
  double sigma = 0.01;
  double alpha = 0.0;
  double beta = 0.0;
  PositiveMode positive_mode = PositiveMode::any;
  /// CLD: weight G by the raw log-probability instead of the probability.
  bool cld_raw_log_weight = false;
  /// Count β‖W‖²_F once per anchor instead of once per batch.
  bool w_penalty_per_anchor = false;
  Reduction reduction = Reduction::sum;

  /// Throws ParameterError unless τ > 0, σ > 0, α ≥ 0, β ≥ 0.
  void validate() const;
};

struct CandidateSet {
  Matrix z;  ///< m × e unit rows
  Matrix y;  ///< m × c binary
  Matrix d;  ///< m × c; the first `live_rows` rows mirror the batch's live d
  std::size_t live_rows = 0;

  std::size_t size() const noexcept { return z.rows(); }
};

/// Batch keys (with the batch labels and current distributions) stacked on
/// top of a queue snapshot.
CandidateSet make_candidates(const Matrix& keys, const Matrix& y, const Matrix& d,
                             const memory::QueueSnapshot& queue);

struct PositiveSelection {
  std::vector<bool> positive;                 ///< over candidates: P(i)
  std::vector<std::size_t> anchor_labels;     ///< labels j with y_i^j = 1
  std::vector<std::vector<bool>> per_label;   ///< per anchor label: P^j(i)
};

/// ANY: positive iff label sets intersect; ALL: iff label vectors are equal.
/// The anchor's own key (`self`) is always positive. P^j(i) = {p ∈ P(i) :
/// y_p^j = 1}.
PositiveSelection select_positives(std::span<const double> y_anchor, const Matrix& y_candidates,
                                   PositiveMode mode, std::optional<std::size_t> self = {});

/// exp(−‖z_i − z_p‖²/2σ²).
double rbf_weight(std::span<const double> z_i, std::span<const double> z_p, double sigma);

/// log( exp(z_i·z_p/τ) / Σ_a exp(z_i·z_a/τ) ) over the rows a of `z_all`.
double contrast_weight(std::span<const double> z_i, std::size_t p, const Matrix& z_all, double tau);

struct AnchorBatch {
  const Matrix& z;  ///< b × e query embeddings
  const Matrix& y;  ///< b × c
  const Matrix& d;  ///< b × c live distributions (unused by mulsupcon)
};

struct LossResult {
  double total = 0.0;
  // Additive parts of `total` after reduction.
  double contrastive = 0.0;
  double g = 0.0;
  double h = 0.0;  ///< α·Σ H_i
  double w_penalty = 0.0;
  Matrix dz;
  Matrix dd;
  Matrix dw;
};

/// Label-balanced multi-label contrastive loss:
///   L_i = Σ_{j: y_i^j=1} (−1/|P^j(i)|) Σ_{p∈P^j(i)} log p_{i,p}
///   L   = Σ_i L_i / Σ_i |y_i|
/// Empty P^j(i) contributes 0. Returns 0 when no anchor has a label.
LossResult mulsupcon_loss(const Matrix& z, const Matrix& y, const CandidateSet& cand, double tau,
                          PositiveMode mode);

enum class DistributionKind { rbf, contrast };

/// Σ_i (G_i + α·H_i) + β‖W‖²_F, where
///   G_i = Σ_{p∈P(i)} w_{i,p} ‖d_i − d_p‖²  (w = RBF kernel, or the softmax
///         probability p_{i,p} for the contrast kind; raw log p with
///         cld_raw_log_weight)
///   H_i = ‖y_i − d_i‖² + Σ_{queue p∈P(i)} ‖y_p − d_p‖².
LossResult label_distribution_loss(const AnchorBatch& batch, const CandidateSet& cand,
                                   const Hyper& hyper, const Matrix& w, DistributionKind kind);

/// MULSUPCON delegates to mulsupcon_loss. RLD/CLD:
///   L = Σ_i [ −Σ_{j:y_i^j=1} Σ_{p∈P^j(i)} d_p^j · log p_{i,p} ] + label_distribution_loss
/// with d_p the live row for batch candidates and the stored row for queue
/// candidates.
LossResult total_loss(const AnchorBatch& batch, const CandidateSet& cand, const Hyper& hyper,
                      const Matrix& w, LossMode mode);

struct BceResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// Mean over all n·c entries of −[t·log σ(x) + (1−t)·log(1−σ(x))], in the
/// stable form max(x,0) − x·t + log(1 + e^{−|x|}).
BceResult bce_loss(const Matrix& logits, const Matrix& targets);

}  // namespace mlcld::objectives
