#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "iklr/csv.hpp"
#include "iklr/data.hpp"
#include "iklr/types.hpp"

namespace iklr {

/// Truncated-l1 kernel K(u,v) = max(tau - |u - v|_1, 0). Indefinite in general.
template <typename Scalar>
struct Tl1Kernel {
  Scalar tau;
};

/// Radial basis kernel. The default form is exp(-|u - v|_2 / sigma^2); with
/// squared_exponent the conventional exp(-|u - v|_2^2 / sigma^2) is used.
template <typename Scalar>
struct RbfKernel {
  Scalar sigma;
  bool squared_exponent = false;
};

/// A Gram matrix loaded from CSV instead of evaluated pointwise.
struct PrecomputedKernel {
  std::string path;
};

template <typename Scalar>
using KernelSpec = std::variant<Tl1Kernel<Scalar>, RbfKernel<Scalar>, PrecomputedKernel>;

template <typename Scalar>
struct KernelMatrix {
  Matrix<Scalar> entries;
  bool symmetric = false;
};

/// TL1 bandwidth suggested for m-dimensional inputs: 0.7 * m.
template <typename Scalar = double>
Scalar default_tl1_tau(Index m, Scalar factor = Scalar(0.7)) {
  return factor * static_cast<Scalar>(m);
}

template <typename Scalar>
void check_kernel_params(const KernelSpec<Scalar>& spec) {
  if (const auto* tl1 = std::get_if<Tl1Kernel<Scalar>>(&spec)) {
    if (!(tl1->tau > Scalar(0))) throw std::invalid_argument("TL1 kernel requires tau > 0");
  } else if (const auto* rbf = std::get_if<RbfKernel<Scalar>>(&spec)) {
    if (!(rbf->sigma > Scalar(0))) throw std::invalid_argument("RBF kernel requires sigma > 0");
  }
}

template <typename Scalar, typename DerivedU, typename DerivedV>
Scalar eval_kernel(const KernelSpec<Scalar>& spec, const Eigen::MatrixBase<DerivedU>& u,
                   const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("kernel arguments differ in dimension");
  check_kernel_params(spec);
  if (const auto* tl1 = std::get_if<Tl1Kernel<Scalar>>(&spec)) {
    const Scalar dist = (u - v).template lpNorm<1>();
    return std::max(tl1->tau - dist, Scalar(0));
  }
  if (const auto* rbf = std::get_if<RbfKernel<Scalar>>(&spec)) {
    const Scalar d = rbf->squared_exponent ? (u - v).squaredNorm() : (u - v).norm();
    return std::exp(-d / (rbf->sigma * rbf->sigma));
  }
  throw std::invalid_argument("precomputed kernels have no pointwise form");
}

/// Loads a precomputed Gram matrix from CSV: must be square and symmetric to
/// 1e-12 relative; the lower triangle is mirrored so symmetry ends up bitwise.
template <typename Scalar = double>
KernelMatrix<Scalar> load_precomputed_kernel(const std::string& path) {
  Matrix<Scalar> k = read_csv_matrix<Scalar>(path);
  if (k.rows() != k.cols()) throw std::runtime_error(path + ": precomputed kernel matrix is not square");
  const Scalar scale = std::max(Scalar(1), k.cwiseAbs().maxCoeff());
  for (Index i = 0; i < k.rows(); ++i)
    for (Index j = 0; j < i; ++j) {
      if (std::abs(k(i, j) - k(j, i)) > Scalar(1e-12) * scale) {
        throw std::runtime_error(path + ": precomputed kernel matrix is not symmetric");
      }
      k(j, i) = k(i, j);
    }
  return {std::move(k), true};
}

/// Builds the symmetric Gram matrix K_ij = K(x_i, x_j). The lower triangle is
/// evaluated and mirrored, so symmetry is bitwise.
template <typename Scalar>
KernelMatrix<Scalar> gram_matrix(const KernelSpec<Scalar>& spec, const Matrix<Scalar>& x) {
  const Index n = x.rows();
  if (n < 1) throw std::invalid_argument("gram_matrix requires at least one sample");
  if (const auto* pre = std::get_if<PrecomputedKernel>(&spec)) {
    KernelMatrix<Scalar> k = load_precomputed_kernel<Scalar>(pre->path);
    if (k.entries.rows() != n) throw std::runtime_error("precomputed kernel size does not match sample count");
    return k;
  }

  KernelMatrix<Scalar> k;
  k.entries.resize(n, n);
  k.symmetric = true;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      k.entries(i, j) = eval_kernel(spec, x.row(i).transpose(), x.row(j).transpose());
      k.entries(j, i) = k.entries(i, j);
    }
  }
  return k;
}

/// Test-by-train kernel matrix: entry (i, j) = K(z_i, x_j), one row per test
/// sample.
template <typename Scalar>
Matrix<Scalar> cross_matrix(const KernelSpec<Scalar>& spec, const Matrix<Scalar>& z, const Matrix<Scalar>& x) {
  if (z.cols() != x.cols()) throw std::invalid_argument("train and test feature dimensions differ");
  Matrix<Scalar> k(z.rows(), x.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < x.rows(); ++j) {
      k(i, j) = eval_kernel(spec, z.row(i).transpose(), x.row(j).transpose());
    }
  }
  return k;
}

/// Candidate RBF bandwidths: 2^k times the median pairwise l2 distance for
/// k in {-3..3}.
template <typename Scalar>
std::vector<Scalar> default_sigma_grid(const Matrix<Scalar>& x) {
  std::vector<Scalar> dists;
  dists.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = i + 1; j < x.rows(); ++j) dists.push_back((x.row(i) - x.row(j)).norm());
  Scalar median = Scalar(1);
  if (!dists.empty()) {
    std::sort(dists.begin(), dists.end());
    median = dists[dists.size() / 2];
    if (!(median > Scalar(0))) median = Scalar(1);
  }
  std::vector<Scalar> grid;
  for (int k = -3; k <= 3; ++k) grid.push_back(std::ldexp(Scalar(1), k) * median);
  return grid;
}

/// Picks the RBF bandwidth with the best mean k-fold validation accuracy.
/// `trainer(train_fold, validation_fold, sigma)` must return the validation
/// accuracy. Ties resolve to the smallest sigma.
template <typename Scalar, typename Trainer>
Scalar select_rbf_sigma(const Dataset<Scalar>& train, std::vector<Scalar> grid, int folds, std::uint64_t seed,
                        Trainer&& trainer) {
  if (grid.empty()) throw std::invalid_argument("sigma grid is empty");
  std::sort(grid.begin(), grid.end());
  const auto partitions = kfold(train, folds, seed);
  Scalar best_sigma = grid.front();
  Scalar best_acc = Scalar(-1);
  for (const Scalar sigma : grid) {
    Scalar acc = Scalar(0);
    for (const auto& fold : partitions) {
      acc += trainer(subset(train, fold.train), subset(train, fold.validation), sigma);
    }
    acc /= static_cast<Scalar>(partitions.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

}  // namespace iklr
