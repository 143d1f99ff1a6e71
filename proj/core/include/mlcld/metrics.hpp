#pragma once

#include <string>

#include "mlcld/matrix.hpp"

namespace mlcld::metrics {

/// The six multi-label evaluation metrics, each in [0, 1].
struct MetricsReport {
  double ha = 0.0;
  double ebf1 = 0.0;
  double mif1 = 0.0;
  double maf1 = 0.0;
  double p_at_1 = 0.0;
  double map = 0.0;
};

inline constexpr const char* kCsvHeader = "ha,ebf1,mif1,maf1,p_at_1,map";

/// Comma-joined values in header order, shortest round-trip formatting.
std::string to_csv_row(const MetricsReport& r);

/// Edge-case conventions, emitted alongside reports.
inline constexpr const char* kConventions =
    "ebf1: sample with empty truth and empty prediction scores 1; "
    "maf1: label with no positives and no predictions scores 0; "
    "p_at_1: samples with empty truth excluded, ties to lowest label index; "
    "map: per-label AP over samples, labels without relevant samples excluded, ties by sample index";

/// predicted = scores ≥ threshold.
Matrix threshold_scores(const Matrix& scores, double threshold);

double hamming_accuracy(const Matrix& pred, const Matrix& truth);
double example_based_f1(const Matrix& pred, const Matrix& truth);

struct MicroMacro {
  double micro = 0.0;
  double macro = 0.0;
};
MicroMacro micro_macro_f1(const Matrix& pred, const Matrix& truth);

double precision_at_1(const Matrix& scores, const Matrix& truth);
double mean_average_precision(const Matrix& scores, const Matrix& truth);

/// Thresholds `scores` and computes all six metrics. Threshold must lie in (0, 1).
MetricsReport evaluate_all(const Matrix& scores, double threshold, const Matrix& truth);

}  // namespace mlcld::metrics
