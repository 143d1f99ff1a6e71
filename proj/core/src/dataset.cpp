#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mlcld/dataio.hpp"
#include "mlcld/errors.hpp"
#include "mlcld/ops.hpp"

namespace mlcld::dataio {

double MulanDataset::mean_labels_per_sample() const {
  if (n() == 0) return 0.0;
  return labels.sum() / static_cast<double>(n());
}

MulanDataset split_mulan(const ArffData& arff, const std::vector<std::string>& label_names) {
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t j = 0; j < arff.attributes.size(); ++j) column_of.emplace(arff.attributes[j].name, j);

  std::vector<std::size_t> label_cols;
  std::vector<bool> is_label(arff.attributes.size(), false);
  for (const auto& name : label_names) {
    const auto it = column_of.find(name);
    if (it == column_of.end()) throw DataError("label '" + name + "' has no matching ARFF attribute");
    label_cols.push_back(it->second);
    is_label[it->second] = true;
  }

  std::vector<std::size_t> feature_cols;
  MulanDataset ds;
  for (std::size_t j = 0; j < arff.attributes.size(); ++j) {
    if (!is_label[j]) {
      feature_cols.push_back(j);
      ds.feature_names.push_back(arff.attributes[j].name);
    }
  }
  ds.label_names = label_names;

  const std::size_t n = arff.values.rows();
  ds.features = Matrix(n, feature_cols.size());
  ds.labels = Matrix(n, label_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < feature_cols.size(); ++k) ds.features(i, k) = arff.values(i, feature_cols[k]);
    for (std::size_t k = 0; k < label_cols.size(); ++k) {
      const double v = arff.values(i, label_cols[k]);
      if (v != 0.0 && v != 1.0) {
        throw DataError("non-binary value in label column '" + label_names[k] + "' at row " +
                        std::to_string(i));
      }
      ds.labels(i, k) = v;
    }
  }
  if (!ds.features.all_finite()) throw DataError("feature matrix contains non-finite values");
  return ds;
}

MulanDataset load_mulan_pair(const std::filesystem::path& arff_path,
                             const std::filesystem::path& xml_path) {
  const ArffData arff = parse_arff(read_text_file(arff_path));
  return split_mulan(arff, parse_labels_xml(read_text_file(xml_path)));
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows(), f = x.cols();
  s.mean.assign(f, 0.0);
  s.scale.assign(f, 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) s.mean[j] += x(i, j);
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(f, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) var[j] += (x(i, j) - s.mean[j]) * (x(i, j) - s.mean[j]);
  for (std::size_t j = 0; j < f; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Matrix& x) const {
  if (x.cols() != mean.size()) throw DimensionError("standardizer: feature count mismatch");
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = (x(i, j) - mean[j]) * scale[j];
}

std::vector<Batch> make_batches(const MulanDataset& data, std::size_t batch_size, bool shuffle,
                                Rng& rng) {
  if (batch_size == 0) throw ParameterError("make_batches: batch_size must be >= 1");
  if (data.n() == 0) throw DataError("make_batches: empty dataset");

  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) rng.shuffle(order);

  std::vector<Batch> batches;
  batches.reserve((order.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    b.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
    b.x = data.features.gather_rows(b.indices);
    b.y = data.labels.gather_rows(b.indices);
    batches.push_back(std::move(b));
  }
  return batches;
}

AugmentedViews augment(const Batch& batch, double mask_rate, Rng& rng) {
  auto v0 = ops::bernoulli_mask(batch.x, mask_rate, rng);
  auto v1 = ops::bernoulli_mask(batch.x, mask_rate, rng);
  return {std::move(v0.values), std::move(v1.values)};
}

}  // namespace mlcld::dataio
