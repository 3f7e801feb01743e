#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iklr/data.hpp"
#include "iklr/kernels.hpp"
#include "iklr/objective.hpp"
#include "iklr/solver.hpp"
#include "iklr/spectral.hpp"
#include "iklr/types.hpp"

namespace iklr {

enum class TrainMethod { kCcicp, kCccp, kFlip, kClip, kShift, kKlrPsd };

inline const std::vector<std::pair<std::string, TrainMethod>>& method_table() {
  static const std::vector<std::pair<std::string, TrainMethod>> table = {
      {"ccicp", TrainMethod::kCcicp}, {"cccp", TrainMethod::kCccp},   {"flip", TrainMethod::kFlip},
      {"clip", TrainMethod::kClip},   {"shift", TrainMethod::kShift}, {"klr-psd", TrainMethod::kKlrPsd},
  };
  return table;
}

inline std::string method_names() {
  std::string names;
  for (const auto& [name, method] : method_table()) {
    if (!names.empty()) names += ", ";
    names += name;
  }
  return names;
}

inline TrainMethod parse_method(const std::string& name) {
  for (const auto& [key, method] : method_table()) {
    if (key == name) return method;
  }
  throw std::invalid_argument("unknown method '" + name + "' (valid: " + method_names() + ")");
}

inline std::string method_name(TrainMethod method) {
  for (const auto& [key, value] : method_table()) {
    if (value == method) return key;
  }
  return "?";
}

template <typename Scalar>
struct TrainingMeta {
  Scalar lambda = Scalar(1);
  Scalar epsilon = Scalar(1);
  int outer_iterations = 0;
  Scalar final_objective = Scalar(0);
};

/// A trained classifier in representer form: prediction evaluates the kernel
/// between a test point and the stored (normalized) training samples and
/// takes the sigmoid of the beta-weighted sum.
template <typename Scalar>
struct Model {
  KernelSpec<Scalar> kernel_spec;
  NormParams<Scalar> norm_params;
  Matrix<Scalar> train_features;  // normalized, n x m
  Vector<Scalar> beta;
  TrainingMeta<Scalar> meta;
};

/// Reference trainer for PSD kernels: plain gradient descent on the convex
/// KLR objective, with the same step and stop rules as the inner solver.
template <typename Scalar>
SolveResult<Scalar> klr_train(const KernelMatrix<Scalar>& k, const Vector<Scalar>& labels,
                              const SolverConfig<Scalar>& config) {
  const Index n = k.entries.rows();
  auto loss = [&](const Vector<Scalar>& b) {
    Scalar sum = Scalar(0);
    const Vector<Scalar> z = labels.cwiseProduct(k.entries * b);
    for (Index i = 0; i < n; ++i) sum += detail::logistic_loss(z[i]);
    return Scalar(0.5) * config.lambda * b.dot(k.entries * b) + sum / static_cast<Scalar>(n);
  };
  auto grad = [&](const Vector<Scalar>& b) -> Vector<Scalar> {
    const Vector<Scalar> z = labels.cwiseProduct(k.entries * b);
    Vector<Scalar> ywq(n);
    for (Index i = 0; i < n; ++i) ywq[i] = labels[i] * (Scalar(1) - sigmoid(z[i]));
    return config.lambda * (k.entries * b) - (Scalar(1) / static_cast<Scalar>(n)) * (k.entries * ywq);
  };

  Vector<Scalar> beta = config.beta0 ? *config.beta0 : Vector<Scalar>::Zero(n);
  if (beta.size() != n) throw std::invalid_argument("beta0 length does not match kernel size");

  SolveResult<Scalar> result;
  result.objective_trace.emplace_back(0, loss(beta));
  auto out = detail::gradient_descent<Scalar>(std::move(beta), loss, grad, config);
  result.beta = std::move(out.beta);
  result.inner_gradient_evaluations = out.gradient_evals;
  result.outer_iterations = 1;
  result.objective_trace.emplace_back(1, loss(result.beta));
  result.converged_by = out.hit_cap ? ConvergedBy::kIterationCap : ConvergedBy::kRelativeChange;
  return result;
}

/// Trains a model end to end: normalize, build the Gram matrix, then run the
/// method-specific trainer. Spectrum methods repair the Gram matrix and train it
/// as PSD KLR; klr-psd requires the kernel to already be PSD.
template <typename Scalar>
Model<Scalar> train_model(const Dataset<Scalar>& train, const KernelSpec<Scalar>& spec,
                          const SolverConfig<Scalar>& config, TrainMethod method,
                          SolveResult<Scalar>* solve_out = nullptr) {
  validate(train);
  if (!has_both_classes(train.labels)) throw std::invalid_argument("training set must contain both classes");

  Model<Scalar> model;
  model.kernel_spec = spec;
  model.norm_params = fit_normalizer(train);
  model.train_features = apply_normalizer(model.norm_params, train.features);

  const KernelMatrix<Scalar> k = gram_matrix(spec, model.train_features);
  SolveResult<Scalar> result;
  Scalar effective_epsilon = config.epsilon;

  switch (method) {
    case TrainMethod::kCcicp:
    case TrainMethod::kCccp: {
      auto instance = make_problem(k, train.labels, config.lambda, config.rho_override);
      result = method == TrainMethod::kCccp ? cccp_train(instance, config) : ccicp_train(instance, config);
      if (method == TrainMethod::kCccp) effective_epsilon = Scalar(1e-4);
      break;
    }
    case TrainMethod::kFlip:
    case TrainMethod::kClip:
    case TrainMethod::kShift: {
      const auto eig = eigh(k);
      KernelMatrix<Scalar> repaired;
      if (eig.eigenvalues[eig.eigenvalues.size() - 1] >= Scalar(0)) {
        repaired = k;  // already PSD: all three repairs are the identity
      } else {
        const SpectrumMode mode = method == TrainMethod::kFlip  ? SpectrumMode::kFlip
                                  : method == TrainMethod::kClip ? SpectrumMode::kClip
                                                                 : SpectrumMode::kShift;
        repaired = spectrum_modify(eig, mode);
      }
      result = klr_train(repaired, train.labels, config);
      break;
    }
    case TrainMethod::kKlrPsd: {
      const auto eig = eigh(k);
      const Scalar mu_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
      if (mu_min < Scalar(-1e-8) * inf_norm(k.entries)) {
        throw std::invalid_argument("klr-psd requires a PSD kernel; Gram matrix is indefinite");
      }
      result = klr_train(k, train.labels, config);
      break;
    }
  }

  model.beta = result.beta;
  model.meta = {config.lambda, effective_epsilon, result.outer_iterations, result.objective_trace.back().second};
  if (solve_out) *solve_out = std::move(result);
  return model;
}

/// Classification scores in (0,1): sigmoid of the representer sum over the
/// stored training samples. Input features are raw; normalization is applied
/// internally.
template <typename Scalar>
Vector<Scalar> predict_scores(const Model<Scalar>& model, const Matrix<Scalar>& test_features) {
  const Matrix<Scalar> z = apply_normalizer(model.norm_params, test_features);
  const Matrix<Scalar> cross = cross_matrix(model.kernel_spec, z, model.train_features);
  const Vector<Scalar> f = cross * model.beta;
  Vector<Scalar> scores(f.size());
  for (Index i = 0; i < f.size(); ++i) scores[i] = sigmoid(f[i]);
  return scores;
}

/// Labels from scores: +1 when the score exceeds 0.5, otherwise -1.
template <typename Scalar>
Vector<Scalar> classify(const Vector<Scalar>& scores) {
  Vector<Scalar> labels(scores.size());
  for (Index i = 0; i < scores.size(); ++i) labels[i] = scores[i] > Scalar(0.5) ? Scalar(1) : Scalar(-1);
  return labels;
}

template <typename Scalar>
Scalar accuracy(const Vector<Scalar>& predicted, const Vector<Scalar>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("label vectors differ in length");
  if (predicted.size() == 0) throw std::invalid_argument("cannot compute accuracy of an empty set");
  Index hits = 0;
  for (Index i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<Scalar>(hits) / static_cast<Scalar>(predicted.size());
}

namespace detail {

inline constexpr const char* kModelVersion = "IKLR/1";

template <typename Scalar>
void write_row(std::ofstream& out, const Eigen::Ref<const Vector<Scalar>>& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_real(static_cast<double>(v[i]));
  }
  out << '\n';
}

class ModelReader {
 public:
  explicit ModelReader(const std::string& path) : path_(path), lines_(read_lines(path)) {}

  const std::string& next(const std::string& what) {
    if (pos_ >= lines_.size()) {
      throw std::runtime_error(path_ + ": unexpected end of file while reading " + what);
    }
    return lines_[pos_++];
  }

  std::string expect_key(const std::string& key) {
    const std::string& line = next(key);
    if (line.size() < key.size() + 1 || line.compare(0, key.size(), key) != 0 || line[key.size()] != ' ') {
      throw std::runtime_error(path_ + ":" + std::to_string(pos_) + ": expected '" + key + " ...'");
    }
    return line.substr(key.size() + 1);
  }

  std::size_t line_number() const { return pos_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

template <typename Scalar>
Vector<Scalar> parse_row(const std::string& line, Index expected, const std::string& where) {
  std::istringstream in(line);
  std::vector<Scalar> values;
  std::string token;
  while (in >> token) values.push_back(static_cast<Scalar>(parse_real(token, where)));
  if (static_cast<Index>(values.size()) != expected) {
    throw std::runtime_error(where + ": expected " + std::to_string(expected) + " values, got " +
                             std::to_string(values.size()));
  }
  Vector<Scalar> out(expected);
  for (Index i = 0; i < expected; ++i) out[i] = values[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace detail

/// Versioned text format: header "IKLR/1", kernel spec, training meta, sizes,
/// normalizer, feature rows and the beta row, all reals at 17 significant
/// digits (bitwise round trip).
template <typename Scalar>
void save_model(const Model<Scalar>& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << detail::kModelVersion << '\n';
  if (const auto* tl1 = std::get_if<Tl1Kernel<Scalar>>(&model.kernel_spec)) {
    out << "kernel tl1 " << format_real(static_cast<double>(tl1->tau)) << '\n';
  } else if (const auto* rbf = std::get_if<RbfKernel<Scalar>>(&model.kernel_spec)) {
    out << "kernel rbf " << format_real(static_cast<double>(rbf->sigma)) << ' ' << (rbf->squared_exponent ? 1 : 0)
        << '\n';
  } else {
    out << "kernel precomputed " << std::get<PrecomputedKernel>(model.kernel_spec).path << '\n';
  }
  out << "lambda " << format_real(static_cast<double>(model.meta.lambda)) << '\n';
  out << "epsilon " << format_real(static_cast<double>(model.meta.epsilon)) << '\n';
  out << "outer_iterations " << model.meta.outer_iterations << '\n';
  out << "final_objective " << format_real(static_cast<double>(model.meta.final_objective)) << '\n';
  out << "n " << model.train_features.rows() << '\n';
  out << "m " << model.train_features.cols() << '\n';
  out << "norm_min ";
  detail::write_row<Scalar>(out, model.norm_params.minimum);
  out << "norm_range ";
  detail::write_row<Scalar>(out, model.norm_params.range);
  for (Index i = 0; i < model.train_features.rows(); ++i) {
    detail::write_row<Scalar>(out, model.train_features.row(i).transpose());
  }
  detail::write_row<Scalar>(out, model.beta);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

template <typename Scalar = double>
Model<Scalar> load_model(const std::string& path) {
  detail::ModelReader reader(path);
  const std::string version = reader.next("version header");
  if (version != detail::kModelVersion) {
    throw std::runtime_error(path + ": incompatible model file version '" + version + "' (expected " +
                             detail::kModelVersion + ")");
  }

  Model<Scalar> model;
  {
    const std::string kernel_line = reader.expect_key("kernel");
    std::istringstream in(kernel_line);
    std::string kind;
    in >> kind;
    if (kind == "tl1") {
      std::string tau;
      in >> tau;
      model.kernel_spec = Tl1Kernel<Scalar>{static_cast<Scalar>(detail::parse_real(tau, path + ": kernel tau"))};
    } else if (kind == "rbf") {
      std::string sigma;
      int squared = 0;
      in >> sigma >> squared;
      model.kernel_spec = RbfKernel<Scalar>{static_cast<Scalar>(detail::parse_real(sigma, path + ": kernel sigma")),
                                            squared != 0};
    } else if (kind == "precomputed") {
      std::string rest;
      std::getline(in, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
      model.kernel_spec = PrecomputedKernel{rest};
    } else {
      throw std::runtime_error(path + ": unknown kernel kind '" + kind + "'");
    }
  }
  model.meta.lambda = static_cast<Scalar>(detail::parse_real(reader.expect_key("lambda"), path + ": lambda"));
  model.meta.epsilon = static_cast<Scalar>(detail::parse_real(reader.expect_key("epsilon"), path + ": epsilon"));
  model.meta.outer_iterations =
      static_cast<int>(detail::parse_real(reader.expect_key("outer_iterations"), path + ": outer_iterations"));
  model.meta.final_objective =
      static_cast<Scalar>(detail::parse_real(reader.expect_key("final_objective"), path + ": final_objective"));
  const Index n = static_cast<Index>(detail::parse_real(reader.expect_key("n"), path + ": n"));
  const Index m = static_cast<Index>(detail::parse_real(reader.expect_key("m"), path + ": m"));
  if (n < 1 || m < 1) throw std::runtime_error(path + ": invalid dimensions");

  model.norm_params.minimum = detail::parse_row<Scalar>(reader.expect_key("norm_min"), m, path + ": norm_min");
  model.norm_params.range = detail::parse_row<Scalar>(reader.expect_key("norm_range"), m, path + ": norm_range");
  model.train_features.resize(n, m);
  for (Index i = 0; i < n; ++i) {
    const std::string& line = reader.next("feature row " + std::to_string(i + 1));
    model.train_features.row(i) =
        detail::parse_row<Scalar>(line, m, path + ": feature row " + std::to_string(i + 1)).transpose();
  }
  model.beta = detail::parse_row<Scalar>(reader.next("beta row"), n, path + ": beta row");
  return model;
}

}  // namespace iklr
