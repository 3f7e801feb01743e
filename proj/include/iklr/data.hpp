#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iklr/csv.hpp"
#include "iklr/rng.hpp"
#include "iklr/types.hpp"

namespace iklr {

/// A labeled sample set: one row per sample, labels in {+1, -1}.
template <typename Scalar>
struct Dataset {
  Matrix<Scalar> features;  // n x m
  Vector<Scalar> labels;    // length n, entries +1 or -1

  Index n() const { return features.rows(); }
  Index m() const { return features.cols(); }
};

/// Per-feature min and range (max - min) fitted on a training set.
template <typename Scalar>
struct NormParams {
  Vector<Scalar> minimum;
  Vector<Scalar> range;
};

template <typename Scalar>
void validate(const Dataset<Scalar>& data) {
  if (data.n() < 1 || data.m() < 1) throw std::invalid_argument("dataset must have n >= 1 and m >= 1");
  if (data.labels.size() != data.n()) throw std::invalid_argument("label count does not match sample count");
  for (Index i = 0; i < data.n(); ++i) {
    if (data.labels[i] != Scalar(1) && data.labels[i] != Scalar(-1)) {
      throw std::invalid_argument("label at row " + std::to_string(i + 1) + " is not +1/-1");
    }
  }
}

template <typename Scalar>
bool has_both_classes(const Vector<Scalar>& labels) {
  bool pos = false, neg = false;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] > Scalar(0)) pos = true;
    else neg = true;
  }
  return pos && neg;
}

/// Loads a dataset from headerless CSV: each row is "label,f1,...,fm".
/// Labels may be -1/+1 or 0/1; 0 maps to -1.
template <typename Scalar = double>
Dataset<Scalar> load_dataset(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::vector<Scalar> labels;
  std::vector<std::vector<Scalar>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto fields = detail::split_fields(lines[i], ',');
    if (fields.size() < 2) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected a label and at least one feature");
    }
    const std::string lwhere = path + ":" + std::to_string(i + 1) + ":1";
    const double raw = detail::parse_real(fields[0], lwhere);
    Scalar label;
    if (raw == -1.0 || raw == 0.0) label = Scalar(-1);
    else if (raw == 1.0) label = Scalar(1);
    else throw std::runtime_error(lwhere + ": invalid label " + std::string(fields[0]) + " (want -1, 0 or 1)");

    std::vector<Scalar> row;
    row.reserve(fields.size() - 1);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const std::string where = path + ":" + std::to_string(i + 1) + ":" + std::to_string(j + 1);
      row.push_back(static_cast<Scalar>(detail::parse_real(fields[j], where)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": row has " + std::to_string(row.size()) +
                               " features, expected " + std::to_string(rows.front().size()));
    }
    labels.push_back(label);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  Dataset<Scalar> data;
  data.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  data.labels.resize(static_cast<Index>(labels.size()));
  for (Index i = 0; i < data.n(); ++i) {
    data.labels[i] = labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.m(); ++j) data.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return data;
}

/// Fits per-feature min and range on the training set only.
template <typename Scalar>
NormParams<Scalar> fit_normalizer(const Dataset<Scalar>& train) {
  if (train.n() < 1) throw std::invalid_argument("cannot fit normalizer on an empty dataset");
  NormParams<Scalar> params;
  params.minimum = train.features.colwise().minCoeff();
  params.range = train.features.colwise().maxCoeff() - params.minimum.transpose();
  return params;
}

/// Maps each feature x to (x - min) / range. Zero-range features map to 0.
/// Values outside [0,1] are allowed (no clamping on test data).
template <typename Scalar>
Dataset<Scalar> apply_normalizer(const NormParams<Scalar>& params, const Dataset<Scalar>& data) {
  Dataset<Scalar> out;
  out.features = apply_normalizer(params, data.features);
  out.labels = data.labels;
  return out;
}

template <typename Scalar>
Matrix<Scalar> apply_normalizer(const NormParams<Scalar>& params, const Matrix<Scalar>& features) {
  if (features.cols() != params.minimum.size()) {
    throw std::invalid_argument("feature dimension does not match normalizer");
  }
  Matrix<Scalar> out(features.rows(), features.cols());
  for (Index j = 0; j < features.cols(); ++j) {
    if (params.range[j] == Scalar(0)) {
      out.col(j).setZero();
    } else {
      out.col(j) = (features.col(j).array() - params.minimum[j]) / params.range[j];
    }
  }
  return out;
}

template <typename Scalar>
Dataset<Scalar> subset(const Dataset<Scalar>& data, const std::vector<Index>& indices) {
  Dataset<Scalar> out;
  out.features.resize(static_cast<Index>(indices.size()), data.m());
  out.labels.resize(static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = data.features.row(indices[i]);
    out.labels[static_cast<Index>(i)] = data.labels[indices[i]];
  }
  return out;
}

/// Seeded train/test split. The train side receives ceil(n * fraction)
/// samples and must contain both classes; the permutation is redrawn up to
/// 100 times before giving up.
template <typename Scalar>
std::pair<Dataset<Scalar>, Dataset<Scalar>> split(const Dataset<Scalar>& data, double train_fraction,
                                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0,1)");
  }
  const Index n = data.n();
  const Index train_size = static_cast<Index>(std::ceil(static_cast<double>(n) * train_fraction));
  if (train_size >= n) throw std::invalid_argument("train fraction leaves no test samples");

  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  for (int attempt = 0; attempt < 100; ++attempt) {
    rng.shuffle(perm);
    std::vector<Index> train_idx(perm.begin(), perm.begin() + train_size);
    bool pos = false, neg = false;
    for (Index i : train_idx) (data.labels[i] > Scalar(0) ? pos : neg) = true;
    if (pos && neg) {
      std::vector<Index> test_idx(perm.begin() + train_size, perm.end());
      std::sort(train_idx.begin(), train_idx.end());
      std::sort(test_idx.begin(), test_idx.end());
      return {subset(data, train_idx), subset(data, test_idx)};
    }
  }
  throw std::runtime_error("could not produce a train split containing both classes");
}

struct FoldIndices {
  std::vector<Index> train;
  std::vector<Index> validation;
};

/// Seeded k-fold partition: validation folds are disjoint, cover all indices
/// and differ in size by at most one.
template <typename Scalar>
std::vector<FoldIndices> kfold(const Dataset<Scalar>& data, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold requires k >= 2");
  const Index n = data.n();
  if (n < k) throw std::invalid_argument("kfold requires n >= k");

  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);

  std::vector<FoldIndices> folds(static_cast<std::size_t>(k));
  const Index base = n / k;
  const Index extra = n % k;
  Index offset = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.validation.assign(perm.begin() + offset, perm.begin() + offset + size);
    fold.train.reserve(static_cast<std::size_t>(n - size));
    fold.train.insert(fold.train.end(), perm.begin(), perm.begin() + offset);
    fold.train.insert(fold.train.end(), perm.begin() + offset + size, perm.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
    offset += size;
  }
  return folds;
}

}  // namespace iklr
