// Command-line front end: Gram construction, spectral reports, training,
// prediction, evaluation and multi-method benchmarking.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iklr/csv.hpp"
#include "iklr/data.hpp"
#include "iklr/kernels.hpp"
#include "iklr/model.hpp"
#include "iklr/objective.hpp"
#include "iklr/solver.hpp"
#include "iklr/spectral.hpp"

namespace {

using iklr::Index;

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct KernelOptions {
  std::string kind = "tl1";
  double tau = 0.0;  // 0 means "use tau_factor * m"
  double tau_factor = 0.7;
  double sigma = 0.0;
  bool squared_exponent = false;
  bool cv_sigma = false;
  int cv_folds = 10;
};

void add_kernel_flags(CLI::App* cmd, KernelOptions& opt, bool with_cv) {
  cmd->add_option("--kernel", opt.kind, "Kernel: tl1 or rbf")
      ->check(CLI::IsMember({"tl1", "rbf"}))
      ->capture_default_str();
  cmd->add_option("--tau", opt.tau, "TL1 bandwidth (default: tau-factor * m)");
  cmd->add_option("--tau-factor", opt.tau_factor, "TL1 bandwidth as a multiple of m")->capture_default_str();
  cmd->add_option("--sigma", opt.sigma, "RBF bandwidth");
  cmd->add_flag("--squared-exponent", opt.squared_exponent, "Use exp(-d^2/sigma^2) instead of exp(-d/sigma^2)");
  if (with_cv) {
    cmd->add_flag("--cv-sigma", opt.cv_sigma, "Pick the RBF bandwidth by k-fold cross-validation");
    cmd->add_option("--cv-folds", opt.cv_folds, "Folds for --cv-sigma")->capture_default_str();
  }
}

iklr::KernelSpec<double> resolve_kernel(const KernelOptions& opt, Index m) {
  if (opt.kind == "tl1") {
    const double tau = opt.tau > 0.0 ? opt.tau : iklr::default_tl1_tau<double>(m, opt.tau_factor);
    return iklr::Tl1Kernel<double>{tau};
  }
  if (opt.sigma <= 0.0) {
    throw CLI::ValidationError("--sigma", "rbf kernel requires --sigma > 0 (or --cv-sigma where available)");
  }
  return iklr::RbfKernel<double>{opt.sigma, opt.squared_exponent};
}

struct SolverOptions {
  double lambda = 1.0;
  double epsilon = 1.0;
  double step = 0.2;
  double decay = 0.5;
  int max_outer = 15;
  int k_max = 1000;
  std::string rho = "auto";
  std::uint64_t seed = 0;
};

void add_solver_flags(CLI::App* cmd, SolverOptions& opt) {
  cmd->add_option("--lambda", opt.lambda, "Regularization strength")->capture_default_str();
  cmd->add_option("--epsilon", opt.epsilon, "Inexactness parameter")->capture_default_str();
  cmd->add_option("--max-outer", opt.max_outer, "Outer iteration cap")->capture_default_str();
  cmd->add_option("--step", opt.step, "Gradient step size eta")->capture_default_str();
  cmd->add_option("--decay", opt.decay, "Step decay factor")->capture_default_str();
  cmd->add_option("--k-max", opt.k_max, "Inner iteration cap")->capture_default_str();
  cmd->add_option("--rho", opt.rho, "Decomposition shift: 'auto' or a value")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
}

iklr::SolverConfig<double> to_config(const SolverOptions& opt) {
  iklr::SolverConfig<double> config;
  config.lambda = opt.lambda;
  config.epsilon = opt.epsilon;
  config.eta = opt.step;
  config.decay = opt.decay;
  config.t_max = opt.max_outer;
  config.k_max = opt.k_max;
  if (opt.rho != "auto") {
    try {
      std::size_t used = 0;
      config.rho_override = std::stod(opt.rho, &used);
      if (used != opt.rho.size()) throw std::invalid_argument(opt.rho);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--rho", "expected 'auto' or a number, got '" + opt.rho + "'");
    }
  }
  return config;
}

iklr::KernelSpec<double> resolve_kernel_with_cv(const KernelOptions& kopt, const iklr::Dataset<double>& data,
                                                const SolverOptions& sopt, iklr::TrainMethod method) {
  if (kopt.kind == "rbf" && kopt.cv_sigma) {
    const auto config = to_config(sopt);
    auto trainer = [&](const iklr::Dataset<double>& tr, const iklr::Dataset<double>& va, double sigma) {
      const iklr::KernelSpec<double> spec = iklr::RbfKernel<double>{sigma, kopt.squared_exponent};
      const auto model = iklr::train_model(tr, spec, config, method);
      return iklr::accuracy(iklr::classify(iklr::predict_scores(model, va.features)), va.labels);
    };
    const double sigma = iklr::select_rbf_sigma<double>(data, iklr::default_sigma_grid(data.features),
                                                        kopt.cv_folds, sopt.seed, trainer);
    std::cout << "cv_sigma " << iklr::format_real(sigma) << "\n";
    return iklr::RbfKernel<double>{sigma, kopt.squared_exponent};
  }
  return resolve_kernel(kopt, data.m());
}

void write_trace(const std::string& path, const iklr::SolveResult<double>& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "outer_iteration,objective\n";
  for (const auto& [t, f] : result.objective_trace) out << t << ',' << iklr::format_real(f) << "\n";
}

// ---------------------------------------------------------------------------
// gram

struct GramArgs {
  std::string data;
  std::string out;
  KernelOptions kernel;
};

void run_gram(const GramArgs& args) {
  const auto data = iklr::load_dataset<double>(args.data);
  const auto spec = resolve_kernel(args.kernel, data.m());
  const auto gram = iklr::gram_matrix(spec, data.features);

  std::string comment;
  if (const auto* tl1 = std::get_if<iklr::Tl1Kernel<double>>(&spec)) {
    comment = "kernel=tl1 tau=" + fmt_short(tl1->tau);
  } else if (const auto* rbf = std::get_if<iklr::RbfKernel<double>>(&spec)) {
    comment = "kernel=rbf sigma=" + fmt_short(rbf->sigma) + (rbf->squared_exponent ? " squared_exponent=1" : "");
  }
  comment += " n=" + std::to_string(data.n()) + " m=" + std::to_string(data.m());
  iklr::write_csv_matrix(args.out, gram.entries, comment);
  std::cout << "wrote " << data.n() << "x" << data.n() << " gram matrix to " << args.out << "\n";
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeArgs {
  std::string kernel_matrix;
  std::string data;
  std::string out;
  KernelOptions kernel;
  SolverOptions solver;
};

void run_decompose(const DecomposeArgs& args) {
  iklr::KernelMatrix<double> k;
  if (!args.kernel_matrix.empty()) {
    k = iklr::load_precomputed_kernel<double>(args.kernel_matrix);
  } else if (!args.data.empty()) {
    const auto data = iklr::load_dataset<double>(args.data);
    k = iklr::gram_matrix(resolve_kernel(args.kernel, data.m()), data.features);
  } else {
    throw CLI::ValidationError("decompose", "either --kernel-matrix or --data is required");
  }

  const Index n = k.entries.rows();
  const auto eig = iklr::eigh(k);
  const double mu_min = eig.eigenvalues[n - 1];
  const double mu_max = eig.eigenvalues[0];
  const Index v = eig.nonnegative_count();

  const auto config = to_config(args.solver);
  const double rho = config.rho_override ? *config.rho_override : iklr::choose_rho(eig);
  const auto decomp = iklr::positive_decomposition(k, eig, rho);

  iklr::ProblemInstance<double> instance{k, decomp, iklr::Vector<double>::Ones(n), config.lambda};
  const double bound = iklr::theorem_bound(instance);
  const double norm_plus = iklr::inf_norm(decomp.k_plus.entries);
  const double norm_minus = iklr::inf_norm(decomp.k_minus.entries);

  std::cout << "n " << n << "\n";
  std::cout << "mu_min " << iklr::format_real(mu_min) << "\n";
  std::cout << "mu_max " << iklr::format_real(mu_max) << "\n";
  std::cout << "v " << v << "\n";
  std::cout << "rho " << iklr::format_real(rho) << "\n";
  std::cout << "norm_inf_k_plus " << iklr::format_real(norm_plus) << "\n";
  std::cout << "norm_inf_k_minus " << iklr::format_real(norm_minus) << "\n";
  std::cout << "theorem_bound " << iklr::format_real(bound) << "\n";
  std::cout << "bound_satisfied " << (config.epsilon < bound ? 1 : 0) << "\n";
  if (mu_min < 0.0) {
    std::cout << "spectrum indefinite\n";
  } else {
    std::cout << "spectrum psd (k_minus ~= rho*I, v = n)\n";
  }

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    out << "n,mu_min,mu_max,v,rho,norm_inf_k_plus,norm_inf_k_minus,theorem_bound\n";
    out << n << ',' << iklr::format_real(mu_min) << ',' << iklr::format_real(mu_max) << ',' << v << ','
        << iklr::format_real(rho) << ',' << iklr::format_real(norm_plus) << ',' << iklr::format_real(norm_minus)
        << ',' << iklr::format_real(bound) << "\n";
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string method = "ccicp";
  std::string model_out;
  std::string trace_out;
  KernelOptions kernel;
  SolverOptions solver;
};

void run_train(const TrainArgs& args) {
  iklr::TrainMethod method;
  try {
    method = iklr::parse_method(args.method);
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("--method", e.what());
  }
  const auto data = iklr::load_dataset<double>(args.data);
  const auto spec = resolve_kernel_with_cv(args.kernel, data, args.solver, method);
  const auto config = to_config(args.solver);

  iklr::SolveResult<double> result;
  const auto model = iklr::train_model(data, spec, config, method, &result);
  iklr::save_model(model, args.model_out);
  if (!args.trace_out.empty()) write_trace(args.trace_out, result);

  std::cout << "method " << iklr::method_name(method) << "\n";
  std::cout << "epsilon " << iklr::format_real(model.meta.epsilon)
            << (method == iklr::TrainMethod::kCccp ? " (cccp preset)" : "") << "\n";
  std::cout << "outer_iterations " << result.outer_iterations << "\n";
  std::cout << "inner_gradient_evaluations " << result.inner_gradient_evaluations << "\n";
  std::cout << "final_objective " << iklr::format_real(model.meta.final_objective) << "\n";
  std::cout << "converged_by "
            << (result.converged_by == iklr::ConvergedBy::kRelativeChange ? "relative-change" : "iteration-cap")
            << "\n";
  std::cout << "model " << args.model_out << "\n";
}

// ---------------------------------------------------------------------------
// predict / eval

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

void run_predict(const PredictArgs& args) {
  const auto model = iklr::load_model<double>(args.model);
  const auto data = iklr::load_dataset<double>(args.data);
  const auto scores = iklr::predict_scores(model, data.features);
  const auto labels = iklr::classify(scores);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.out.empty()) {
    file.open(args.out);
    if (!file) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    out = &file;
  }
  *out << "index,score,label\n";
  for (Index i = 0; i < scores.size(); ++i) {
    *out << i << ',' << iklr::format_real(scores[i]) << ',' << static_cast<int>(labels[i]) << "\n";
  }
}

void run_eval(const PredictArgs& args) {
  const auto model = iklr::load_model<double>(args.model);
  const auto data = iklr::load_dataset<double>(args.data);
  const auto labels = iklr::classify(iklr::predict_scores(model, data.features));
  std::cout << "n " << data.n() << "\n";
  std::cout << "accuracy " << iklr::format_real(iklr::accuracy(labels, data.labels)) << "\n";
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
  std::vector<std::string> data_files;
  std::vector<std::string> methods = {"ccicp"};
  int repeats = 10;
  double train_fraction = 0.5;
  std::string out;
  KernelOptions kernel;
  SolverOptions solver;
};

struct BenchmarkRow {
  std::string dataset;
  std::string method;
  int repeat;
  double accuracy;
  double train_seconds;
  double test_seconds;
};

void run_benchmark(const BenchmarkArgs& args) {
  std::vector<iklr::TrainMethod> methods;
  for (const auto& name : args.methods) {
    try {
      methods.push_back(iklr::parse_method(name));
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--methods", e.what());
    }
  }
  if (args.repeats < 1) throw CLI::ValidationError("--repeats", "must be at least 1");
  if (!(args.train_fraction > 0.0 && args.train_fraction < 1.0)) {
    throw CLI::ValidationError("--train-fraction", "must lie in (0,1)");
  }

  const auto config = to_config(args.solver);
  std::vector<BenchmarkRow> rows;
  using clock = std::chrono::steady_clock;

  for (const auto& file : args.data_files) {
    const auto data = iklr::load_dataset<double>(file);
    const std::string name = std::filesystem::path(file).stem().string();
    const auto spec = resolve_kernel(args.kernel, data.m());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (int r = 0; r < args.repeats; ++r) {
        const auto [train, test] = iklr::split(data, args.train_fraction, args.solver.seed + static_cast<std::uint64_t>(r));
        const auto t0 = clock::now();
        const auto model = iklr::train_model(train, spec, config, methods[mi]);
        const auto t1 = clock::now();
        const auto predicted = iklr::classify(iklr::predict_scores(model, test.features));
        const auto t2 = clock::now();
        rows.push_back({name, args.methods[mi], r, iklr::accuracy(predicted, test.labels),
                        std::chrono::duration<double>(t1 - t0).count(),
                        std::chrono::duration<double>(t2 - t1).count()});
      }
    }
  }

  // Aggregate per (dataset, method), preserving input order.
  struct Agg {
    double acc_sum = 0, acc_sq = 0, train_sum = 0, test_sum = 0;
    int count = 0;
  };
  std::vector<std::pair<std::pair<std::string, std::string>, Agg>> groups;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.dataset, row.method);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, Agg{}});
      it = groups.end() - 1;
    }
    it->second.acc_sum += row.accuracy;
    it->second.acc_sq += row.accuracy * row.accuracy;
    it->second.train_sum += row.train_seconds;
    it->second.test_sum += row.test_seconds;
    it->second.count += 1;
  }

  std::size_t name_width = 7, method_width = 6;
  for (const auto& [key, agg] : groups) {
    name_width = std::max(name_width, key.first.size());
    method_width = std::max(method_width, key.second.size());
  }
  std::printf("%-*s %-*s %8s %10s %10s %12s %12s\n", static_cast<int>(name_width), "dataset",
              static_cast<int>(method_width), "method", "repeats", "acc_mean", "acc_std", "train_s", "test_s");
  for (const auto& [key, agg] : groups) {
    const double mean = agg.acc_sum / agg.count;
    const double variance = std::max(0.0, agg.acc_sq / agg.count - mean * mean);
    std::printf("%-*s %-*s %8d %10.4f %10.4f %12.4f %12.4f\n", static_cast<int>(name_width), key.first.c_str(),
                static_cast<int>(method_width), key.second.c_str(), agg.count, mean, std::sqrt(variance),
                agg.train_sum / agg.count, agg.test_sum / agg.count);
  }

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    out << "dataset,method,repeat,accuracy,train_seconds,test_seconds\n";
    for (const auto& row : rows) {
      out << row.dataset << ',' << row.method << ',' << row.repeat << ',' << iklr::format_real(row.accuracy) << ','
          << iklr::format_real(row.train_seconds) << ',' << iklr::format_real(row.test_seconds) << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indefinite kernel logistic regression toolkit"};
  app.require_subcommand(1);

  GramArgs gram_args;
  auto* gram = app.add_subcommand("gram", "Write the kernel Gram matrix of a dataset as CSV");
  gram->add_option("--data", gram_args.data, "Dataset CSV (label,f1,...,fm)")->required()->check(CLI::ExistingFile);
  gram->add_option("--out", gram_args.out, "Output CSV path")->required();
  add_kernel_flags(gram, gram_args.kernel, false);

  DecomposeArgs dec_args;
  auto* dec = app.add_subcommand("decompose", "Report the spectrum and positive decomposition of a kernel");
  dec->add_option("--kernel-matrix", dec_args.kernel_matrix, "Precomputed Gram matrix CSV")->check(CLI::ExistingFile);
  dec->add_option("--data", dec_args.data, "Dataset CSV (builds the Gram matrix first)")->check(CLI::ExistingFile);
  dec->add_option("--out", dec_args.out, "Also write the report as CSV");
  add_kernel_flags(dec, dec_args.kernel, false);
  add_solver_flags(dec, dec_args.solver);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--data", train_args.data, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--method", train_args.method, "One of: " + iklr::method_names())->capture_default_str();
  train->add_option("--model", train_args.model_out, "Output model path")->required();
  train->add_option("--trace", train_args.trace_out, "Write the objective trace CSV");
  add_kernel_flags(train, train_args.kernel, true);
  add_solver_flags(train, train_args.solver);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Score a dataset with a trained model");
  predict->add_option("--model", predict_args.model, "Model path")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", predict_args.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", predict_args.out, "Output CSV (default: stdout)");

  PredictArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Report classification accuracy on a labeled dataset");
  eval->add_option("--model", eval_args.model, "Model path")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_args.data, "Dataset CSV")->required()->check(CLI::ExistingFile);

  BenchmarkArgs bench_args;
  auto* bench = app.add_subcommand("benchmark", "Split/train/evaluate datasets across methods");
  bench->add_option("--data", bench_args.data_files, "Dataset CSV files")->required()->check(CLI::ExistingFile);
  bench->add_option("--methods", bench_args.methods, "Methods to compare (" + iklr::method_names() + ")")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--repeats", bench_args.repeats, "Split/train/evaluate repetitions")->capture_default_str();
  bench->add_option("--train-fraction", bench_args.train_fraction, "Training fraction per split")
      ->capture_default_str();
  bench->add_option("--out", bench_args.out, "Write per-repeat rows as CSV");
  add_kernel_flags(bench, bench_args.kernel, false);
  add_solver_flags(bench, bench_args.solver);

  gram->callback([&] { run_gram(gram_args); });
  dec->callback([&] { run_decompose(dec_args); });
  train->callback([&] { run_train(train_args); });
  predict->callback([&] { run_predict(predict_args); });
  eval->callback([&] { run_eval(eval_args); });
  bench->callback([&] { run_benchmark(bench_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
