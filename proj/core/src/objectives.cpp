#include "mlcld/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "mlcld/errors.hpp"
#include "mlcld/ops.hpp"

namespace mlcld::objectives {
namespace {

/// Row-wise log-softmax of z·candᵀ/τ and its probabilities.
struct Similarities {
  Matrix log_prob;  // b × m
  Matrix prob;      // b × m
};

Similarities similarities(const Matrix& z, const Matrix& cand_z, double tau) {
  Matrix s = ops::matmul_nt(z, cand_z);
  s *= 1.0 / tau;
  Similarities out{s, Matrix(s.rows(), s.cols())};
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto lp = out.log_prob.row(i);
    if (lp.empty()) continue;
    const double mx = *std::max_element(lp.begin(), lp.end());
    double acc = 0.0;
    for (double v : lp) acc += std::exp(v - mx);
    const double lse = mx + std::log(acc);
    auto pr = out.prob.row(i);
    for (std::size_t a = 0; a < lp.size(); ++a) {
      lp[a] -= lse;
      pr[a] = std::exp(lp[a]);
    }
  }
  return out;
}

void check_batch(const Matrix& z, const Matrix& y, const CandidateSet& cand) {
  if (y.rows() != z.rows()) throw DimensionError("loss: z and y row counts differ");
  if (cand.z.cols() != z.cols()) throw DimensionError("loss: candidate embedding width differs");
  if (cand.y.cols() != y.cols() || cand.y.rows() != cand.size()) {
    throw DimensionError("loss: candidate label shape differs");
  }
  if (cand.live_rows > std::min(cand.size(), z.rows())) {
    throw DimensionError("loss: live candidate rows exceed the batch");
  }
}

std::optional<std::size_t> self_of(std::size_t i, const CandidateSet& cand) {
  if (i < cand.live_rows) return i;
  return std::nullopt;
}

/// dz_i += Σ_a ds_a · k_a / τ
void push_similarity_grad(std::span<const double> ds, const Matrix& cand_z, double tau,
                          std::span<double> dz_i) {
  for (std::size_t a = 0; a < ds.size(); ++a) {
    if (ds[a] == 0.0) continue;
    const double coef = ds[a] / tau;
    const auto k = cand_z.row(a);
    for (std::size_t e = 0; e < dz_i.size(); ++e) dz_i[e] += coef * k[e];
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

/// Stored distribution of candidate p, or the live one for a batch candidate.
std::span<const double> candidate_d(std::size_t p, const CandidateSet& cand, const Matrix& live_d) {
  return p < cand.live_rows ? live_d.row(p) : cand.d.row(p);
}

struct Terms {
  bool main = false;
  bool distribution = false;
  DistributionKind kind = DistributionKind::contrast;
};

LossResult evaluate(const AnchorBatch& batch, const CandidateSet& cand, const Hyper& hyper,
                    const Matrix& w, Terms terms) {
  hyper.validate();
  check_batch(batch.z, batch.y, cand);
  if (!batch.d.same_shape(batch.y)) throw DimensionError("loss: d and y shapes differ");
  if (cand.d.rows() != cand.size() || cand.d.cols() != batch.d.cols()) {
    throw DimensionError("loss: candidate distribution shape differs");
  }
  if (terms.distribution && w.cols() != batch.d.cols()) {
    throw DimensionError("loss: head weight width differs from label count");
  }

  const std::size_t b = batch.z.rows(), m = cand.size(), c = batch.y.cols();
  const Similarities sim = similarities(batch.z, cand.z, hyper.tau);

  LossResult out;
  out.dz = Matrix(b, batch.z.cols());
  out.dd = Matrix(b, c);
  out.dw = Matrix(w.rows(), w.cols());
  std::vector<double> ds(m), coef(m);

  for (std::size_t i = 0; i < b; ++i) {
    const auto sel = select_positives(batch.y.row(i), cand.y, hyper.positive_mode, self_of(i, cand));
    const auto lp = sim.log_prob.row(i);
    const auto pr = sim.prob.row(i);
    const auto d_i = batch.d.row(i);
    auto dd_i = out.dd.row(i);
    std::fill(ds.begin(), ds.end(), 0.0);

    if (terms.main) {
      std::fill(coef.begin(), coef.end(), 0.0);
      for (std::size_t li = 0; li < sel.anchor_labels.size(); ++li) {
        const std::size_t j = sel.anchor_labels[li];
        for (std::size_t p = 0; p < m; ++p) {
          if (!sel.per_label[li][p]) continue;
          const double dpj = candidate_d(p, cand, batch.d)[j];
          out.contrastive -= dpj * lp[p];
          coef[p] -= dpj;
          if (p < cand.live_rows) out.dd(p, j) -= lp[p];
        }
      }
      double coef_sum = 0.0;
      for (std::size_t p = 0; p < m; ++p) coef_sum += coef[p];
      for (std::size_t a = 0; a < m; ++a) ds[a] += coef[a] - pr[a] * coef_sum;
    }

    if (terms.distribution) {
      double weighted_gap = 0.0;  // Σ_p g_p·w_p (exp) or Σ_p g_p (raw), for the softmax Jacobian
      const bool contrast = terms.kind == DistributionKind::contrast;
      for (std::size_t p = 0; p < m; ++p) {
        if (!sel.positive[p]) continue;
        const auto d_p = candidate_d(p, cand, batch.d);
        const double gap = squared_distance(d_i, d_p);
        double weight;
        if (!contrast) {
          weight = rbf_weight(batch.z.row(i), cand.z.row(p), hyper.sigma);
          // d w / d z_i = −w (z_i − k_p)/σ²
          const double scale = -gap * weight / (hyper.sigma * hyper.sigma);
          const auto zi = batch.z.row(i);
          const auto kp = cand.z.row(p);
          auto dz_i = out.dz.row(i);
          for (std::size_t e = 0; e < dz_i.size(); ++e) dz_i[e] += scale * (zi[e] - kp[e]);
        } else if (hyper.cld_raw_log_weight) {
          weight = lp[p];
          ds[p] += gap;
          weighted_gap += gap;
        } else {
          weight = pr[p];
          ds[p] += gap * pr[p];
          weighted_gap += gap * pr[p];
        }
        out.g += weight * gap;
        if (p != i || p >= cand.live_rows) {
          for (std::size_t j = 0; j < c; ++j) {
            const double gj = 2.0 * weight * (d_i[j] - d_p[j]);
            dd_i[j] += gj;
            if (p < cand.live_rows) out.dd(p, j) -= gj;
          }
        }
      }
      if (contrast && weighted_gap != 0.0) {
        for (std::size_t a = 0; a < m; ++a) ds[a] -= pr[a] * weighted_gap;
      }

      // H_i: the anchor's own row plus every queue positive.
      const auto y_i = batch.y.row(i);
      double h_i = squared_distance(y_i, d_i);
      for (std::size_t j = 0; j < c; ++j) dd_i[j] += hyper.alpha * 2.0 * (d_i[j] - y_i[j]);
      for (std::size_t p = cand.live_rows; p < m; ++p) {
        if (sel.positive[p]) h_i += squared_distance(cand.y.row(p), cand.d.row(p));
      }
      out.h += hyper.alpha * h_i;
    }

    push_similarity_grad(ds, cand.z, hyper.tau, out.dz.row(i));
  }

  if (terms.distribution) {
    const double copies = hyper.w_penalty_per_anchor ? static_cast<double>(b) : 1.0;
    out.w_penalty = copies * hyper.beta * w.squared_norm();
    out.dw = w * (2.0 * copies * hyper.beta);
  }

  out.total = out.contrastive + out.g + out.h + out.w_penalty;
  if (hyper.reduction == Reduction::mean && b > 0) {
    const double inv = 1.0 / static_cast<double>(b);
    out.total *= inv;
    out.contrastive *= inv;
    out.g *= inv;
    out.h *= inv;
    out.w_penalty *= inv;
    out.dz *= inv;
    out.dd *= inv;
    out.dw *= inv;
  }
  return out;
}

}  // namespace

void Hyper::validate() const {
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
}

CandidateSet make_candidates(const Matrix& keys, const Matrix& y, const Matrix& d,
                             const memory::QueueSnapshot& queue) {
  if (keys.rows() != y.rows() || keys.rows() != d.rows()) {
    throw DimensionError("make_candidates: batch row counts differ");
  }
  if (queue.size() > 0 &&
      (queue.z.cols() != keys.cols() || queue.y.cols() != y.cols() || queue.d.cols() != d.cols())) {
    throw DimensionError("make_candidates: queue widths differ from the batch");
  }
  auto stack = [](const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.flat().begin(), top.flat().end(), out.data());
    if (bottom.rows() > 0)
      std::copy(bottom.flat().begin(), bottom.flat().end(), out.data() + top.size());
    return out;
  };
  return {stack(keys, queue.z), stack(y, queue.y), stack(d, queue.d), keys.rows()};
}

PositiveSelection select_positives(std::span<const double> y_anchor, const Matrix& y_candidates,
                                   PositiveMode mode, std::optional<std::size_t> self) {
  if (y_candidates.cols() != y_anchor.size()) {
    throw DimensionError("select_positives: label width differs");
  }
  const std::size_t m = y_candidates.rows(), c = y_anchor.size();
  PositiveSelection sel;
  sel.positive.assign(m, false);
  for (std::size_t j = 0; j < c; ++j)
    if (y_anchor[j] == 1.0) sel.anchor_labels.push_back(j);

  for (std::size_t p = 0; p < m; ++p) {
    const auto y_p = y_candidates.row(p);
    bool pos;
    if (mode == PositiveMode::all) {
      pos = std::equal(y_p.begin(), y_p.end(), y_anchor.begin());
    } else {
      pos = std::any_of(sel.anchor_labels.begin(), sel.anchor_labels.end(),
                        [&](std::size_t j) { return y_p[j] == 1.0; });
    }
    sel.positive[p] = pos || (self && *self == p);
  }

  sel.per_label.reserve(sel.anchor_labels.size());
  for (std::size_t j : sel.anchor_labels) {
    std::vector<bool> member(m, false);
    for (std::size_t p = 0; p < m; ++p) member[p] = sel.positive[p] && y_candidates(p, j) == 1.0;
    sel.per_label.push_back(std::move(member));
  }
  return sel;
}

double rbf_weight(std::span<const double> z_i, std::span<const double> z_p, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (z_i.size() != z_p.size()) throw DimensionError("rbf_weight: width differs");
  return std::exp(-squared_distance(z_i, z_p) / (2.0 * sigma * sigma));
}

double contrast_weight(std::span<const double> z_i, std::size_t p, const Matrix& z_all, double tau) {
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
  if (z_all.rows() == 0) throw DimensionError("contrast_weight: empty candidate set");
  if (p >= z_all.rows() || z_all.cols() != z_i.size()) {
    throw DimensionError("contrast_weight: candidate index or width out of range");
  }
  std::vector<double> s(z_all.rows());
  for (std::size_t a = 0; a < s.size(); ++a) {
    double dot = 0.0;
    const auto za = z_all.row(a);
    for (std::size_t e = 0; e < z_i.size(); ++e) dot += z_i[e] * za[e];
    s[a] = dot / tau;
  }
  const double mx = *std::max_element(s.begin(), s.end());
  double acc = 0.0;
  for (double v : s) acc += std::exp(v - mx);
  return s[p] - mx - std::log(acc);
}

LossResult mulsupcon_loss(const Matrix& z, const Matrix& y, const CandidateSet& cand, double tau,
                          PositiveMode mode) {
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
  check_batch(z, y, cand);
  const std::size_t b = z.rows(), m = cand.size();

  LossResult out;
  out.dz = Matrix(b, z.cols());
  const double label_count = y.sum();
  if (label_count == 0.0) return out;

  const Similarities sim = similarities(z, cand.z, tau);
  std::vector<double> coef(m), ds(m);
  for (std::size_t i = 0; i < b; ++i) {
    const auto sel = select_positives(y.row(i), cand.y, mode, self_of(i, cand));
    const auto lp = sim.log_prob.row(i);
    const auto pr = sim.prob.row(i);
    std::fill(coef.begin(), coef.end(), 0.0);
    for (const auto& member : sel.per_label) {
      const auto count = static_cast<double>(std::count(member.begin(), member.end(), true));
      if (count == 0.0) continue;
      for (std::size_t p = 0; p < m; ++p) {
        if (!member[p]) continue;
        out.contrastive -= lp[p] / count;
        coef[p] -= 1.0 / (count * label_count);
      }
    }
    double coef_sum = 0.0;
    for (double v : coef) coef_sum += v;
    for (std::size_t a = 0; a < m; ++a) ds[a] = coef[a] - pr[a] * coef_sum;
    push_similarity_grad(ds, cand.z, tau, out.dz.row(i));
  }
  out.contrastive /= label_count;
  out.total = out.contrastive;
  return out;
}

LossResult label_distribution_loss(const AnchorBatch& batch, const CandidateSet& cand,
                                   const Hyper& hyper, const Matrix& w, DistributionKind kind) {
  return evaluate(batch, cand, hyper, w, Terms{false, true, kind});
}

LossResult total_loss(const AnchorBatch& batch, const CandidateSet& cand, const Hyper& hyper,
                      const Matrix& w, LossMode mode) {
  if (mode == LossMode::mulsupcon) {
    hyper.validate();
    LossResult r = mulsupcon_loss(batch.z, batch.y, cand, hyper.tau, hyper.positive_mode);
    r.dd = Matrix(batch.y.rows(), batch.y.cols());
    r.dw = Matrix(w.rows(), w.cols());
    return r;
  }
  const auto kind = mode == LossMode::rld ? DistributionKind::rbf : DistributionKind::contrast;
  return evaluate(batch, cand, hyper, w, Terms{true, true, kind});
}

BceResult bce_loss(const Matrix& logits, const Matrix& targets) {
  require_same_shape(logits, targets, "bce_loss");
  BceResult out{0.0, Matrix(logits.rows(), logits.cols())};
  const std::size_t n = logits.size();
  if (n == 0) return out;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = logits.data()[k];
    const double t = targets.data()[k];
    out.loss += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    out.dlogits.data()[k] = (ops::sigmoid(x) - t) * inv;
  }
  out.loss *= inv;
  return out;
}

}  // namespace mlcld::objectives
