#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "iklr/spectral.hpp"
#include "iklr/types.hpp"

namespace iklr {

/// Everything the optimization needs: the (possibly indefinite) Gram matrix,
/// its positive decomposition, the +1/-1 labels and the regularization
/// strength.
template <typename Scalar>
struct ProblemInstance {
  KernelMatrix<Scalar> k;
  PositiveDecomposition<Scalar> decomp;
  Vector<Scalar> labels;
  Scalar lambda = Scalar(1);

  Index n() const { return k.entries.rows(); }
};

/// Builds a ProblemInstance from a Gram matrix: eigendecomposition, rho
/// selection (unless overridden) and the positive decomposition.
template <typename Scalar>
ProblemInstance<Scalar> make_problem(KernelMatrix<Scalar> k, Vector<Scalar> labels, Scalar lambda,
                                     std::optional<std::type_identity_t<Scalar>> rho_override = std::nullopt) {
  if (k.entries.rows() != labels.size()) throw std::invalid_argument("kernel size does not match label count");
  if (!(lambda > Scalar(0))) throw std::invalid_argument("lambda must be positive");
  const auto eig = eigh(k);
  const Scalar rho = rho_override ? *rho_override : choose_rho(eig);
  ProblemInstance<Scalar> instance;
  instance.decomp = positive_decomposition(k, eig, rho);
  instance.k = std::move(k);
  instance.labels = std::move(labels);
  instance.lambda = lambda;
  return instance;
}

/// Overflow-safe logistic sigmoid 1 / (1 + exp(-x)).
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

namespace detail {

/// ln(1 + exp(-z)) evaluated as max(0,-z) + log1p(exp(-|z|)).
template <typename Scalar>
Scalar logistic_loss(Scalar z) {
  return std::max(Scalar(0), -z) + std::log1p(std::exp(-std::abs(z)));
}

/// Margins z_i = y_i * (K beta)_i.
template <typename Scalar>
Vector<Scalar> margins(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  if (beta.size() != instance.n()) throw std::invalid_argument("beta length does not match instance size");
  return instance.labels.cwiseProduct(instance.k.entries * beta);
}

template <typename Scalar>
Scalar mean_logistic_loss(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  const Vector<Scalar> z = margins(instance, beta);
  Scalar sum = Scalar(0);
  for (Index i = 0; i < z.size(); ++i) sum += logistic_loss(z[i]);
  return sum / static_cast<Scalar>(z.size());
}

}  // namespace detail

/// Diagonals used by the gradient and the convergence matrix: w = exp(-z)
/// (clamped at the largest finite value), q = sigmoid(z), h = q (1 - q).
template <typename Scalar>
struct GradientWorkspace {
  Vector<Scalar> w_diag;
  Vector<Scalar> q;
  Vector<Scalar> h_diag;
};

template <typename Scalar>
GradientWorkspace<Scalar> make_workspace(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  const Vector<Scalar> z = detail::margins(instance, beta);
  GradientWorkspace<Scalar> ws;
  ws.w_diag.resize(z.size());
  ws.q.resize(z.size());
  ws.h_diag.resize(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const Scalar w = std::exp(-z[i]);
    ws.w_diag[i] = std::isfinite(w) ? w : std::numeric_limits<Scalar>::max();
    ws.q[i] = sigmoid(z[i]);
    ws.h_diag[i] = ws.q[i] * (Scalar(1) - ws.q[i]);
  }
  return ws;
}

/// Posterior q_i = sigmoid(y_i (K beta)_i).
template <typename Scalar>
Vector<Scalar> posterior_q(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  const Vector<Scalar> z = detail::margins(instance, beta);
  Vector<Scalar> q(z.size());
  for (Index i = 0; i < z.size(); ++i) q[i] = sigmoid(z[i]);
  return q;
}

/// Full objective f(beta) = (lambda/2) beta^T K beta + mean logistic loss.
/// The quadratic term uses the original K (equal to k_plus - k_minus).
template <typename Scalar>
Scalar objective_f(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  const Scalar quad = Scalar(0.5) * instance.lambda * beta.dot(instance.k.entries * beta);
  return quad + detail::mean_logistic_loss(instance, beta);
}

/// The DC split f = g - h with g carrying the k_plus quadratic and the loss,
/// h the k_minus quadratic.
template <typename Scalar>
std::pair<Scalar, Scalar> split_gh(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta) {
  const Scalar g = Scalar(0.5) * instance.lambda * beta.dot(instance.decomp.k_plus.entries * beta) +
                   detail::mean_logistic_loss(instance, beta);
  const Scalar h = Scalar(0.5) * instance.lambda * beta.dot(instance.decomp.k_minus.entries * beta);
  return {g, h};
}

/// Convex surrogate around beta_t: g(beta) - beta^T (lambda k_minus beta_t).
template <typename Scalar>
Scalar surrogate_value(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta,
                       const Vector<Scalar>& beta_t) {
  if (beta_t.size() != instance.n()) throw std::invalid_argument("beta_t length does not match instance size");
  const Scalar g = Scalar(0.5) * instance.lambda * beta.dot(instance.decomp.k_plus.entries * beta) +
                   detail::mean_logistic_loss(instance, beta);
  return g - instance.lambda * beta.dot(instance.decomp.k_minus.entries * beta_t);
}

/// Surrogate gradient lambda k_plus beta - (1/n) K Y W q - lambda k_minus
/// beta_t. The product (Y W q)_i is evaluated through the identity
/// W_ii q_i = 1 - q_i, which stays finite for saturated margins.
template <typename Scalar>
Vector<Scalar> surrogate_gradient(const ProblemInstance<Scalar>& instance, const Vector<Scalar>& beta,
                                  const Vector<Scalar>& beta_t) {
  if (beta_t.size() != instance.n()) throw std::invalid_argument("beta_t length does not match instance size");
  const Vector<Scalar> q = posterior_q(instance, beta);
  const Vector<Scalar> ywq = instance.labels.cwiseProduct(Vector<Scalar>::Ones(q.size()) - q);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(instance.n());
  return instance.lambda * (instance.decomp.k_plus.entries * beta) - inv_n * (instance.k.entries * ywq) -
         instance.lambda * (instance.decomp.k_minus.entries * beta_t);
}

}  // namespace iklr
