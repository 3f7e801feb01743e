#pragma once

#include <Eigen/Jacobi>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iklr/kernels.hpp"
#include "iklr/types.hpp"

namespace iklr {

/// Spectrum of a symmetric matrix: eigenvalues descending, row i of `basis`
/// is the eigenvector of eigenvalues[i], so K = basis^T * diag * basis.
template <typename Scalar>
struct EigenDecomposition {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> basis;

  /// Number of nonnegative eigenvalues (exact zeros count as nonnegative).
  Index nonnegative_count() const {
    Index v = 0;
    while (v < eigenvalues.size() && eigenvalues[v] >= Scalar(0)) ++v;
    return v;
  }
};

/// The rho-shifted split K = k_plus - k_minus with both parts positive
/// definite.
template <typename Scalar>
struct PositiveDecomposition {
  KernelMatrix<Scalar> k_plus;
  KernelMatrix<Scalar> k_minus;
  Scalar rho = Scalar(0);
  KernelMatrix<Scalar> k_original;
};

/// Induced infinity norm: maximum absolute row sum.
template <typename Scalar>
Scalar inf_norm(const Matrix<Scalar>& m) {
  if (m.rows() == 0) return Scalar(0);
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

namespace detail {

template <typename Scalar>
Scalar off_diagonal_norm(const Matrix<Scalar>& a) {
  Scalar sum = Scalar(0);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.cols(); ++j) sum += a(i, j) * a(i, j);
  return std::sqrt(Scalar(2) * sum);
}

/// Fixes the sign of each eigenvector row: the entry of largest magnitude
/// (lowest index on ties) is made positive.
template <typename Scalar>
void apply_sign_convention(Matrix<Scalar>& basis) {
  for (Index i = 0; i < basis.rows(); ++i) {
    Index argmax = 0;
    Scalar best = std::abs(basis(i, 0));
    for (Index j = 1; j < basis.cols(); ++j) {
      const Scalar mag = std::abs(basis(i, j));
      if (mag > best) {
        best = mag;
        argmax = j;
      }
    }
    if (basis(i, argmax) < Scalar(0)) basis.row(i) = -basis.row(i);
  }
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi sweeps. Deterministic:
/// fixed sweep order, descending eigenvalue sort stable in the original
/// index, and a fixed eigenvector sign convention.
template <typename Scalar>
EigenDecomposition<Scalar> eigh(const Matrix<Scalar>& k) {
  const Index n = k.rows();
  if (n != k.cols()) throw std::invalid_argument("eigh requires a square matrix");
  if ((k.array() != k.transpose().array()).any()) throw std::invalid_argument("eigh requires a symmetric matrix");

  Matrix<Scalar> a = k;
  Matrix<Scalar> q = Matrix<Scalar>::Identity(n, n);
  const Scalar frob = a.norm();
  const Scalar tol = Scalar(1e-12) * frob;
  // Entries at or below this cannot push the off-diagonal norm above tol.
  const Scalar skip = tol / static_cast<Scalar>(std::max<Index>(n, 1));

  constexpr int max_sweeps = 100;
  bool converged = (frob == Scalar(0)) || (n == 1);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (detail::off_diagonal_norm(a) <= tol) {
      converged = true;
      break;
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index qq = p + 1; qq < n; ++qq) {
        if (std::abs(a(p, qq)) <= skip) continue;
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a, p, qq);
        a.applyOnTheLeft(p, qq, rot.transpose());
        a.applyOnTheRight(p, qq, rot);
        q.applyOnTheRight(p, qq, rot);
      }
    }
  }
  if (!converged && detail::off_diagonal_norm(a) > tol) {
    throw std::runtime_error("eigh did not converge within the sweep cap");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index lhs, Index rhs) { return a(lhs, lhs) > a(rhs, rhs); });

  EigenDecomposition<Scalar> eig;
  eig.eigenvalues.resize(n);
  eig.basis.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    eig.eigenvalues[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    eig.basis.row(i) = q.col(order[static_cast<std::size_t>(i)]).transpose();
  }
  detail::apply_sign_convention(eig.basis);
  return eig;
}

template <typename Scalar>
EigenDecomposition<Scalar> eigh(const KernelMatrix<Scalar>& k) {
  return eigh(k.entries);
}

/// Shift that makes both decomposition parts positive definite:
/// max(0, -mu_min) plus a small margin scaled by the spectrum.
template <typename Scalar>
Scalar choose_rho(const EigenDecomposition<Scalar>& eig) {
  const Scalar mu_max = eig.eigenvalues[0];
  const Scalar mu_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
  return std::max(Scalar(0), -mu_min) + Scalar(1e-6) * std::max(Scalar(1), std::abs(mu_max));
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> reconstruct(const EigenDecomposition<Scalar>& eig, const Vector<Scalar>& spectrum) {
  Matrix<Scalar> m = eig.basis.transpose() * spectrum.asDiagonal() * eig.basis;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < i; ++j) m(j, i) = m(i, j);
  return m;
}

}  // namespace detail

/// Builds k_plus / k_minus by adding rho above the nonnegative eigenvalues
/// and rho - mu below; requires rho > -mu_min. `original` is retained as
/// k_original.
template <typename Scalar>
PositiveDecomposition<Scalar> positive_decomposition(const KernelMatrix<Scalar>& original,
                                                     const EigenDecomposition<Scalar>& eig, Scalar rho) {
  const Index n = eig.eigenvalues.size();
  const Scalar mu_min = eig.eigenvalues[n - 1];
  if (!(rho > -mu_min)) throw std::invalid_argument("rho must exceed -mu_min");

  const Index v = eig.nonnegative_count();
  Vector<Scalar> plus(n), minus(n);
  for (Index i = 0; i < n; ++i) {
    if (i < v) {
      plus[i] = eig.eigenvalues[i] + rho;
      minus[i] = rho;
    } else {
      plus[i] = rho;
      minus[i] = rho - eig.eigenvalues[i];
    }
  }

  PositiveDecomposition<Scalar> decomp;
  decomp.k_plus = {detail::reconstruct(eig, plus), true};
  decomp.k_minus = {detail::reconstruct(eig, minus), true};
  decomp.rho = rho;
  decomp.k_original = original;
  return decomp;
}

template <typename Scalar>
PositiveDecomposition<Scalar> positive_decomposition(const EigenDecomposition<Scalar>& eig, Scalar rho) {
  KernelMatrix<Scalar> original{detail::reconstruct(eig, eig.eigenvalues), true};
  return positive_decomposition(original, eig, rho);
}

enum class SpectrumMode { kFlip, kClip, kShift };

/// PSD repair baselines: flip negative eigenvalues to their absolute value,
/// clip them to zero, or shift the whole spectrum up by -mu_min.
template <typename Scalar>
KernelMatrix<Scalar> spectrum_modify(const EigenDecomposition<Scalar>& eig, SpectrumMode mode) {
  const Index n = eig.eigenvalues.size();
  Vector<Scalar> spectrum(n);
  const Scalar mu_min = eig.eigenvalues[n - 1];
  const Scalar shift = std::max(Scalar(0), -mu_min);
  for (Index i = 0; i < n; ++i) {
    const Scalar mu = eig.eigenvalues[i];
    switch (mode) {
      case SpectrumMode::kFlip: spectrum[i] = std::abs(mu); break;
      case SpectrumMode::kClip: spectrum[i] = std::max(mu, Scalar(0)); break;
      case SpectrumMode::kShift: spectrum[i] = mu + shift; break;
    }
  }
  return {detail::reconstruct(eig, spectrum), true};
}

}  // namespace iklr
