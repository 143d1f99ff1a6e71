#include "mlcld/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <vector>

#include "mlcld/errors.hpp"

namespace mlcld::metrics {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool on(double v) { return v == 1.0; }

}  // namespace

std::string to_csv_row(const MetricsReport& r) {
  return fmt(r.ha) + "," + fmt(r.ebf1) + "," + fmt(r.mif1) + "," + fmt(r.maf1) + "," +
         fmt(r.p_at_1) + "," + fmt(r.map);
}

Matrix threshold_scores(const Matrix& scores, double threshold) {
  Matrix pred(scores.rows(), scores.cols());
  for (std::size_t k = 0; k < scores.size(); ++k)
    pred.data()[k] = scores.data()[k] >= threshold ? 1.0 : 0.0;
  return pred;
}

double hamming_accuracy(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "hamming_accuracy");
  if (pred.rows() == 0 || pred.cols() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    std::size_t match = 0;
    for (std::size_t j = 0; j < pred.cols(); ++j) match += on(pred(i, j)) == on(truth(i, j));
    total += static_cast<double>(match) / static_cast<double>(pred.cols());
  }
  return total / static_cast<double>(pred.rows());
}

double example_based_f1(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "example_based_f1");
  if (pred.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    std::size_t inter = 0, npred = 0, ntrue = 0;
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      inter += on(pred(i, j)) && on(truth(i, j));
      npred += on(pred(i, j));
      ntrue += on(truth(i, j));
    }
    total += (npred + ntrue == 0) ? 1.0
                                  : 2.0 * static_cast<double>(inter) /
                                        static_cast<double>(npred + ntrue);
  }
  return total / static_cast<double>(pred.rows());
}

MicroMacro micro_macro_f1(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "micro_macro_f1");
  MicroMacro out;
  const std::size_t c = pred.cols();
  if (c == 0) return out;
  std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
  double macro_sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      const bool p = on(pred(i, j)), t = on(truth(i, j));
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    macro_sum += denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  const std::size_t denom = 2 * tp_all + fp_all + fn_all;
  out.micro = denom ? 2.0 * static_cast<double>(tp_all) / static_cast<double>(denom) : 0.0;
  out.macro = macro_sum / static_cast<double>(c);
  return out;
}

double precision_at_1(const Matrix& scores, const Matrix& truth) {
  require_same_shape(scores, truth, "precision_at_1");
  std::size_t counted = 0, hits = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto t = truth.row(i);
    if (std::none_of(t.begin(), t.end(), on)) continue;
    const auto s = scores.row(i);
    // max_element returns the first maximum: ties go to the lowest index.
    const auto top = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    ++counted;
    hits += on(t[top]);
  }
  return counted ? static_cast<double>(hits) / static_cast<double>(counted) : 0.0;
}

double mean_average_precision(const Matrix& scores, const Matrix& truth) {
  require_same_shape(scores, truth, "mean_average_precision");
  const std::size_t n = scores.rows();
  std::vector<std::size_t> order(n);
  double ap_sum = 0.0;
  std::size_t labels_used = 0;
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, j) > scores(b, j); });
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t rank = 0; rank < n; ++rank) {
      if (on(truth(order[rank], j))) {
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
      }
    }
    if (hits == 0) continue;
    ap_sum += precision_sum / static_cast<double>(hits);
    ++labels_used;
  }
  return labels_used ? ap_sum / static_cast<double>(labels_used) : 0.0;
}

MetricsReport evaluate_all(const Matrix& scores, double threshold, const Matrix& truth) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("evaluate_all: threshold must lie in (0, 1)");
  }
  require_same_shape(scores, truth, "evaluate_all");
  const Matrix pred = threshold_scores(scores, threshold);
  MetricsReport r;
  r.ha = hamming_accuracy(pred, truth);
  r.ebf1 = example_based_f1(pred, truth);
  const auto mm = micro_macro_f1(pred, truth);
  r.mif1 = mm.micro;
  r.maf1 = mm.macro;
  r.p_at_1 = precision_at_1(scores, truth);
  r.map = mean_average_precision(scores, truth);
  return r;
}

}  // namespace mlcld::metrics
