#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iklr/objective.hpp"
#include "iklr/rng.hpp"
#include "iklr/types.hpp"

namespace iklr {

/// Hyperparameters for the CCICP/CCCP outer loop and its inner gradient
/// descent. Defaults: lambda 1, inexactness epsilon 1, stepsize eta 0.2,
/// decay 0.5, outer cap 15, inner cap 1000.
template <typename Scalar>
struct SolverConfig {
  Scalar lambda = Scalar(1);
  Scalar epsilon = Scalar(1);
  Scalar eta = Scalar(0.2);
  Scalar decay = Scalar(0.5);
  int t_max = 15;
  int k_max = 1000;
  std::optional<Scalar> rho_override;
  std::optional<Vector<Scalar>> beta0;
};

enum class ConvergedBy { kRelativeChange, kIterationCap };

template <typename Scalar>
struct SolveResult {
  Vector<Scalar> beta;
  int outer_iterations = 0;
  long inner_gradient_evaluations = 0;
  std::vector<std::pair<int, Scalar>> objective_trace;  // (outer iteration, f)
  ConvergedBy converged_by = ConvergedBy::kIterationCap;
};

/// Convergence diagnostics: the epsilon bound from the contraction theorem,
/// the spectral radius of the fixed-point linearization, and an empirical
/// contraction factor.
template <typename Scalar>
struct Diagnostics {
  Scalar theorem_bound = Scalar(0);
  bool bound_satisfied = false;
  Scalar convergence_matrix_spectral_radius = Scalar(0);
  Scalar contraction_estimate = Scalar(0);
};

namespace detail {

template <typename Scalar>
struct DescentOutcome {
  Vector<Scalar> beta;
  int steps = 0;
  long gradient_evals = 0;
  bool hit_cap = false;
  bool stalled = false;
};

/// Fixed-step gradient descent with the relative stop rule
/// |grad| <= epsilon |beta|. A step that would increase the value is retried
/// with the step length halved, up to 30 times; if no decrease is found the
/// descent stops where it is.
template <typename Scalar, typename ValueFn, typename GradFn>
DescentOutcome<Scalar> gradient_descent(Vector<Scalar> beta, ValueFn&& value, GradFn&& grad,
                                        const SolverConfig<Scalar>& config) {
  DescentOutcome<Scalar> out;
  Vector<Scalar> g = grad(beta);
  out.gradient_evals = 1;
  Scalar current = value(beta);
  while (true) {
    if (!g.allFinite()) throw std::runtime_error("non-finite gradient; configuration diverges");
    if (g.norm() <= config.epsilon * beta.norm()) break;
    if (out.steps >= config.k_max) {
      out.hit_cap = true;
      break;
    }
    Scalar step = config.decay * config.eta;
    bool accepted = false;
    Vector<Scalar> candidate;
    Scalar candidate_value = current;
    for (int halving = 0; halving <= 30; ++halving) {
      candidate = beta - step * g;
      candidate_value = value(candidate);
      if (candidate_value <= current) {
        accepted = true;
        break;
      }
      step *= Scalar(0.5);
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    beta = std::move(candidate);
    current = candidate_value;
    ++out.steps;
    g = grad(beta);
    ++out.gradient_evals;
  }
  out.beta = std::move(beta);
  return out;
}

}  // namespace detail

template <typename Scalar>
struct InnerResult {
  Vector<Scalar> beta;
  long gradient_evals = 0;
  int steps = 0;
};

/// One inexact convex solve: minimizes the surrogate linearized at beta_t,
/// starting from beta_t, until |grad| <= epsilon |beta|.
template <typename Scalar>
InnerResult<Scalar> inner_solve(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta_t,
                                const SolverConfig<Scalar>& config) {
  auto value = [&](const Vector<Scalar>& b) { return surrogate_value(instance, b, beta_t); };
  auto grad = [&](const Vector<Scalar>& b) { return surrogate_gradient(instance, b, beta_t); };
  auto out = detail::gradient_descent<Scalar>(beta_t, value, grad, config);
  return {std::move(out.beta), out.gradient_evals, out.steps};
}

/// The CCICP outer loop: linearize the concave part at beta_t, inexactly
/// minimize the surrogate, and stop at t_max or when the relative iterate
/// change falls to epsilon.
template <typename Scalar>
SolveResult<Scalar> ccicp_train(const ProblemInstance<Scalar>& instance, const SolverConfig<Scalar>& config) {
  if (config.t_max < 1) throw std::invalid_argument("t_max must be at least 1");
  if (config.k_max < 1) throw std::invalid_argument("k_max must be at least 1");

  Vector<Scalar> beta = config.beta0 ? *config.beta0 : Vector<Scalar>::Zero(instance.n());
  if (beta.size() != instance.n()) throw std::invalid_argument("beta0 length does not match instance size");

  SolveResult<Scalar> result;
  result.objective_trace.emplace_back(0, objective_f(instance, beta));
  int t = 0;
  while (true) {
    const Vector<Scalar> beta_prev = beta;
    auto inner = inner_solve(instance, beta_prev, config);
    beta = std::move(inner.beta);
    result.inner_gradient_evaluations += inner.gradient_evals;
    ++t;
    result.objective_trace.emplace_back(t, objective_f(instance, beta));

    const Scalar beta_norm = beta.norm();
    bool small_change = false;
    if (beta_norm > Scalar(0)) {
      small_change = (beta - beta_prev).norm() / beta_norm <= config.epsilon;
    } else {
      small_change = (beta_prev.norm() == Scalar(0));
    }
    if (small_change) {
      result.converged_by = ConvergedBy::kRelativeChange;
      break;
    }
    if (t >= config.t_max) {
      result.converged_by = ConvergedBy::kIterationCap;
      break;
    }
  }
  result.outer_iterations = t;
  result.beta = std::move(beta);
  return result;
}

/// Exact-CCCP preset: identical to ccicp_train with epsilon forced to 1e-4.
template <typename Scalar>
SolveResult<Scalar> cccp_train(const ProblemInstance<Scalar>& instance, SolverConfig<Scalar> config) {
  config.epsilon = Scalar(1e-4);
  return ccicp_train(instance, config);
}

/// Right-hand side of the contraction condition:
/// lambda (|K+|_inf - |K-|_inf) - |K|_inf^2 / (4n). May be negative; it is a
/// diagnostic, not a gate.
template <typename Scalar>
Scalar theorem_bound(const ProblemInstance<Scalar>& instance) {
  const Scalar norm_k = inf_norm(instance.k.entries);
  const Scalar norm_plus = inf_norm(instance.decomp.k_plus.entries);
  const Scalar norm_minus = inf_norm(instance.decomp.k_minus.entries);
  return instance.lambda * (norm_plus - norm_minus) - norm_k * norm_k / (Scalar(4) * static_cast<Scalar>(instance.n()));
}

/// Fixed-point linearization M' = lambda K- ((1/n) K^T H K + lambda K+)^{-1}
/// with H = diag(q_i (1 - q_i)), and its spectral radius. The radius comes
/// from the symmetrized similarity L^{-1} K- L^{-T} where L L^T is the inner
/// matrix.
template <typename Scalar>
std::pair<Matrix<Scalar>, Scalar> convergence_matrix(const ProblemInstance<Scalar>& instance,
                                                     const Vector<Scalar>& beta) {
  const auto ws = make_workspace(instance, beta);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(instance.n());
  const Matrix<Scalar>& k = instance.k.entries;
  Matrix<Scalar> inner = inv_n * (k.transpose() * ws.h_diag.asDiagonal() * k) +
                         instance.lambda * instance.decomp.k_plus.entries;
  for (Index i = 0; i < inner.rows(); ++i)
    for (Index j = 0; j < i; ++j) inner(j, i) = inner(i, j);

  Eigen::LLT<Matrix<Scalar>> llt(inner);
  if (llt.info() != Eigen::Success) throw std::runtime_error("convergence matrix inner factor is not PD");

  // M' = lambda K- B^{-1}; with B symmetric, M'^T = lambda B^{-1} K-.
  const Matrix<Scalar> b_inv_km = llt.solve(instance.decomp.k_minus.entries);
  Matrix<Scalar> m = instance.lambda * b_inv_km.transpose();

  // Similarity L^{-1} M' L = lambda L^{-1} K- L^{-T}, symmetric PSD.
  const Matrix<Scalar> l = llt.matrixL();
  const Matrix<Scalar> half = l.template triangularView<Eigen::Lower>().solve(instance.decomp.k_minus.entries);
  const Matrix<Scalar> half_t = half.transpose();
  Matrix<Scalar> similar = l.template triangularView<Eigen::Lower>().solve(half_t);
  for (Index i = 0; i < similar.rows(); ++i)
    for (Index j = 0; j < i; ++j) similar(j, i) = similar(i, j);
  const auto eig = eigh(similar);
  const Scalar radius = instance.lambda * std::max(std::abs(eig.eigenvalues[0]),
                                                   std::abs(eig.eigenvalues[eig.eigenvalues.size() - 1]));
  return {std::move(m), radius};
}

/// Empirical contraction factor of the one-outer-step map: samples pairs of
/// points in [-1,1]^n and returns the largest ratio
/// |phi(a) - phi(b)|_inf / |a - b|_inf (zero-distance pairs are skipped).
template <typename Scalar>
Scalar contraction_estimate(const ProblemInstance<Scalar>& instance, const SolverConfig<Scalar>& config,
                            int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("contraction_estimate requires trials >= 1");
  Rng rng(seed);
  const Index n = instance.n();
  Scalar worst = Scalar(0);
  for (int trial = 0; trial < trials; ++trial) {
    Vector<Scalar> a(n), b(n);
    for (Index i = 0; i < n; ++i) a[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
    for (Index i = 0; i < n; ++i) b[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
    const Scalar dist = (a - b).template lpNorm<Eigen::Infinity>();
    if (dist == Scalar(0)) continue;
    const Vector<Scalar> pa = inner_solve(instance, a, config).beta;
    const Vector<Scalar> pb = inner_solve(instance, b, config).beta;
    const Scalar ratio = (pa - pb).template lpNorm<Eigen::Infinity>() / dist;
    worst = std::max(worst, ratio);
  }
  return worst;
}

template <typename Scalar>
Diagnostics<Scalar> compute_diagnostics(const ProblemInstance<Scalar>& instance, const SolverConfig<Scalar>& config,
                                        const Vector<Scalar>& beta, int trials, std::uint64_t seed) {
  Diagnostics<Scalar> diag;
  diag.theorem_bound = theorem_bound(instance);
  diag.bound_satisfied = config.epsilon < diag.theorem_bound;
  diag.convergence_matrix_spectral_radius = convergence_matrix(instance, beta).second;
  diag.contraction_estimate = contraction_estimate(instance, config, trials, seed);
  return diag;
}

}  // namespace iklr
