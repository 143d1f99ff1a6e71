#pragma once

// Mulan multi-label dataset ingestion: ARFF (dense and sparse rows), the
// label-header XML, batching and mask augmentation.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlcld/matrix.hpp"
#include "mlcld/rng.hpp"

namespace mlcld::dataio {

struct ArffAttribute {
  std::string name;
  bool nominal = false;
  std::vector<std::string> nominal_values;  ///< empty for numeric attributes
};

struct ArffData {
  std::string relation;
  std::vector<ArffAttribute> attributes;
  Matrix values;  ///< n × attributes.size()

  std::vector<std::string> attribute_names() const;
  /// Column index → allowed values, for nominal attributes only.
  std::map<std::size_t, std::vector<std::string>> nominal_columns() const;
};

/// Parses ARFF text. Keywords are case-insensitive, '%' starts a comment,
/// names may be quoted. Nominal values must themselves be numeric literals
/// (e.g. {0,1}); string and date attributes are rejected. Sparse rows
/// `{index value, ...}` use 0-based indices and leave absent entries at 0.
/// Throws ParseError carrying the offending line number.
ArffData parse_arff(std::string_view text);

/// Dense ARFF serialization that reparses to an identical matrix (shortest
/// round-trip number formatting).
std::string write_arff(const ArffData& data);

/// Label names from a Mulan label header, in depth-first document order.
/// Throws ParseError on malformed markup, a label element without a name,
/// or a duplicate name.
std::vector<std::string> parse_labels_xml(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

struct MulanDataset {
  Matrix features;  ///< n × f
  Matrix labels;    ///< n × c, entries in {0, 1}
  std::vector<std::string> label_names;
  std::vector<std::string> feature_names;

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t f() const noexcept { return features.cols(); }
  std::size_t c() const noexcept { return labels.cols(); }
  double mean_labels_per_sample() const;
};

/// Splits parsed ARFF columns into features (non-label attributes, ARFF
/// order) and labels (XML order). Throws DataError if a label name has no
/// matching attribute or a label column holds a value other than 0/1.
MulanDataset split_mulan(const ArffData& arff, const std::vector<std::string>& label_names);

MulanDataset load_mulan_pair(const std::filesystem::path& arff_path,
                             const std::filesystem::path& xml_path);

/// Per-feature z-score parameters estimated on a training split.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  ///< 1/std, or 1 for constant columns

  static Standardizer fit(const Matrix& x);
  void apply(Matrix& x) const;
};

struct Batch {
  std::vector<std::size_t> indices;
  Matrix x;
  Matrix y;

  std::size_t size() const noexcept { return indices.size(); }
};

/// Partitions a (shuffled, if requested) permutation of 0..n-1 into
/// consecutive batches of `batch_size`; the last batch may be smaller.
/// Throws DataError on an empty dataset, ParameterError on batch_size 0.
std::vector<Batch> make_batches(const MulanDataset& data, std::size_t batch_size, bool shuffle,
                                Rng& rng);

struct AugmentedViews {
  Matrix x0;
  Matrix x1;
};

/// Two independent mask augmentations of the batch features.
AugmentedViews augment(const Batch& batch, double mask_rate, Rng& rng);

}  // namespace mlcld::dataio
