#include <doctest.h>

#include <cmath>

#include "iklr/data.hpp"
#include "iklr/kernels.hpp"
#include "test_support.hpp"

using iklr::Index;
using iklr::KernelSpec;
using iklr::Matrix;
using iklr::Vector;

TEST_CASE("tl1 kernel evaluation") {
  const KernelSpec<double> spec = iklr::Tl1Kernel<double>{4.2};
  Vector<double> u = Vector<double>::Constant(6, 0.3);

  CHECK(iklr::eval_kernel(spec, u, u) == 4.2);  // zero distance: exactly tau

  Vector<double> zero = Vector<double>::Zero(6);
  Vector<double> one = Vector<double>::Ones(6);
  CHECK(iklr::eval_kernel(spec, zero, one) == 0.0);  // |u-v|_1 = 6 >= tau: truncated

  Vector<double> wrong = Vector<double>::Zero(5);
  CHECK_THROWS_AS(iklr::eval_kernel(spec, u, wrong), std::invalid_argument);
  CHECK_THROWS_AS(iklr::eval_kernel(KernelSpec<double>{iklr::Tl1Kernel<double>{-1.0}}, u, u),
                  std::invalid_argument);
}

TEST_CASE("rbf kernel evaluation") {
  const KernelSpec<double> spec = iklr::RbfKernel<double>{0.8};
  Vector<double> u(2), v(2);
  u << 0.1, 0.2;
  v << 0.4, 0.6;

  CHECK(iklr::eval_kernel(spec, u, u) == 1.0);
  CHECK(iklr::eval_kernel(spec, u, v) == doctest::Approx(std::exp(-0.5 / 0.64)).epsilon(1e-14));

  const KernelSpec<double> squared = iklr::RbfKernel<double>{0.8, true};
  CHECK(iklr::eval_kernel(squared, u, v) == doctest::Approx(std::exp(-0.25 / 0.64)).epsilon(1e-14));
}

TEST_CASE("precomputed kernels have no pointwise form") {
  const KernelSpec<double> spec = iklr::PrecomputedKernel{"nowhere.csv"};
  Vector<double> u = Vector<double>::Zero(2);
  CHECK_THROWS_AS(iklr::eval_kernel(spec, u, u), std::invalid_argument);
}

TEST_CASE("gram matrix matches hand arithmetic and is bitwise symmetric") {
  const KernelSpec<double> spec = iklr::Tl1Kernel<double>{1.4};
  Matrix<double> x(2, 2);
  x << 0.5, 0.5, 0.1, 0.2;
  const auto k = iklr::gram_matrix(spec, x);
  CHECK(k.symmetric);
  CHECK(k.entries(0, 0) == 1.4);
  CHECK(k.entries(1, 1) == 1.4);
  CHECK(k.entries(0, 1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(k.entries(0, 1) == k.entries(1, 0));  // bitwise by construction

  Matrix<double> single(1, 2);
  single << 0.3, 0.4;
  const auto k1 = iklr::gram_matrix(spec, single);
  CHECK(k1.entries.rows() == 1);
  CHECK(k1.entries(0, 0) == 1.4);

  Matrix<double> dup(2, 2);
  dup << 0.3, 0.4, 0.3, 0.4;
  const auto kd = iklr::gram_matrix(spec, dup);
  CHECK(kd.entries(0, 1) == kd.entries(0, 0));
}

TEST_CASE("gram symmetry is bitwise on random data") {
  iklr::Rng rng(11);
  Matrix<double> x(17, 4);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(0.0, 1.0);
  const KernelSpec<double> spec = iklr::Tl1Kernel<double>{iklr::default_tl1_tau<double>(4)};
  const auto k = iklr::gram_matrix(spec, x);
  CHECK(testsupport::bitwise_equal(k.entries, k.entries.transpose()));

  // TL1 range: 0 <= K <= tau, diagonal exactly tau.
  CHECK(k.entries.minCoeff() >= 0.0);
  CHECK(k.entries.maxCoeff() <= iklr::default_tl1_tau<double>(4));
  for (Index i = 0; i < x.rows(); ++i) CHECK(k.entries(i, i) == iklr::default_tl1_tau<double>(4));

  const KernelSpec<double> rbf = iklr::RbfKernel<double>{0.5};
  const auto kr = iklr::gram_matrix(rbf, x);
  CHECK(kr.entries.minCoeff() > 0.0);
  CHECK(kr.entries.maxCoeff() <= 1.0);
  for (Index i = 0; i < x.rows(); ++i) CHECK(kr.entries(i, i) == 1.0);
}

TEST_CASE("cross matrix agrees with the gram matrix on identical inputs") {
  iklr::Rng rng(5);
  Matrix<double> x(9, 3);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(0.0, 1.0);
  const KernelSpec<double> spec = iklr::Tl1Kernel<double>{2.1};
  const auto gram = iklr::gram_matrix(spec, x);
  const auto cross = iklr::cross_matrix(spec, x, x);
  CHECK(testsupport::bitwise_equal(gram.entries, cross));
}

TEST_CASE("cross matrix shapes and truncation") {
  const KernelSpec<double> spec = iklr::Tl1Kernel<double>{1.4};
  Matrix<double> x(1, 2), z(1, 2);
  x << 0.1, 0.1;
  z << 0.2, 0.1;
  const auto c = iklr::cross_matrix(spec, z, x);
  CHECK(c.rows() == 1);
  CHECK(c.cols() == 1);
  CHECK(c(0, 0) == doctest::Approx(1.3).epsilon(1e-14));

  Matrix<double> far(1, 2);
  far << 5.0, 5.0;  // l1 distance 9.8 >= tau for every train point
  CHECK(iklr::cross_matrix(spec, far, x).isZero(0.0));

  Matrix<double> wrong(1, 3);
  wrong.setZero();
  CHECK_THROWS_AS(iklr::cross_matrix(spec, wrong, x), std::invalid_argument);
}

TEST_CASE("precomputed kernel round trip through CSV") {
  testsupport::TempDir tmp;
  const auto path = tmp.write("k.csv", "# comment line\n1.5,0.25\n0.25,2.5\n");
  const auto k = iklr::load_precomputed_kernel(path);
  CHECK(k.entries(0, 1) == 0.25);
  CHECK(k.entries(1, 1) == 2.5);

  Matrix<double> x(2, 1);
  x << 0, 1;
  const KernelSpec<double> spec = iklr::PrecomputedKernel{path};
  CHECK(testsupport::bitwise_equal(iklr::gram_matrix(spec, x).entries, k.entries));

  Matrix<double> x3(3, 1);
  x3.setZero();
  CHECK_THROWS_AS(iklr::gram_matrix(spec, x3), std::runtime_error);

  const auto bad = tmp.write("bad.csv", "1.0,0.5\n0.4,1.0\n");
  CHECK_THROWS_WITH_AS(iklr::load_precomputed_kernel(bad), doctest::Contains("not symmetric"),
                       std::runtime_error);
}

namespace {

/// Toy trainer: nearest-centroid in kernel-induced geometry is overkill here;
/// accuracy is determined purely by sigma so the CV plumbing is what's tested.
double fake_trainer_accuracy(double sigma) {
  if (sigma == 0.25) return 0.9;
  if (sigma == 0.5) return 0.9;  // tie with 0.25: smaller sigma must win
  return 0.1;
}

}  // namespace

TEST_CASE("select_rbf_sigma picks the best mean accuracy with smallest-sigma ties") {
  iklr::Dataset<double> train;
  train.features.resize(10, 1);
  train.labels.resize(10);
  for (Index i = 0; i < 10; ++i) {
    train.features(i, 0) = static_cast<double>(i);
    train.labels[i] = i < 5 ? -1.0 : 1.0;
  }

  auto trainer = [](const iklr::Dataset<double>&, const iklr::Dataset<double>&, double sigma) {
    return fake_trainer_accuracy(sigma);
  };

  CHECK(iklr::select_rbf_sigma<double>(train, {0.125}, 2, 1, trainer) == 0.125);
  CHECK(iklr::select_rbf_sigma<double>(train, {1.0, 0.5, 0.25}, 2, 1, trainer) == 0.25);
  CHECK_THROWS_AS(iklr::select_rbf_sigma<double>(train, {}, 2, 1, trainer), std::invalid_argument);
}

TEST_CASE("select_rbf_sigma agrees with an independent re-evaluation loop") {
  // Separable toy set; the tiny bandwidth fits, the huge one degenerates to a
  // near-constant kernel.
  iklr::Rng rng(3);
  iklr::Dataset<double> train;
  const Index n = 20;
  train.features.resize(n, 2);
  train.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    train.features(i, 0) = (pos ? 0.8 : 0.2) + rng.uniform(-0.05, 0.05);
    train.features(i, 1) = (pos ? 0.8 : 0.2) + rng.uniform(-0.05, 0.05);
    train.labels[i] = pos ? 1.0 : -1.0;
  }

  // Kernel 1-nearest-neighbour-style trainer: predict by the sign of the
  // mean kernel-weighted label. Independent of the solver stack.
  auto trainer = [](const iklr::Dataset<double>& tr, const iklr::Dataset<double>& va, double sigma) {
    const KernelSpec<double> spec = iklr::RbfKernel<double>{sigma};
    const auto cross = iklr::cross_matrix(spec, va.features, tr.features);
    Index hits = 0;
    for (Index i = 0; i < va.n(); ++i) {
      const double score = cross.row(i).dot(tr.labels);
      if ((score > 0 ? 1.0 : -1.0) == va.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(va.n());
  };

  const std::vector<double> grid = {0.1, 1e6};
  const double chosen = iklr::select_rbf_sigma<double>(train, grid, 5, 7, trainer);

  // Independent oracle: recompute every grid point's mean accuracy directly.
  const auto folds = iklr::kfold(train, 5, 7);
  double best_acc = -1.0, best_sigma = 0.0;
  for (double sigma : grid) {
    double acc = 0.0;
    for (const auto& f : folds) acc += trainer(iklr::subset(train, f.train), iklr::subset(train, f.validation), sigma);
    acc /= static_cast<double>(folds.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_sigma = sigma;
    }
  }
  CHECK(chosen == best_sigma);
  CHECK(chosen == 0.1);
}

TEST_CASE("the kernel layer instantiates for other scalars") {
  const KernelSpec<float> spec = iklr::Tl1Kernel<float>{1.4f};
  Matrix<float> x(2, 2);
  x << 0.5f, 0.5f, 0.1f, 0.2f;
  const auto k = iklr::gram_matrix(spec, x);
  CHECK(k.entries(0, 0) == 1.4f);
  CHECK(k.entries(0, 1) == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(iklr::sigmoid(0.0f) == 0.5f);
}

TEST_CASE("default sigma grid is centered on the median pairwise distance") {
  Matrix<double> x(3, 1);
  x << 0.0, 1.0, 3.0;  // pairwise distances 1, 2, 3 -> median 2
  const auto grid = iklr::default_sigma_grid(x);
  REQUIRE(grid.size() == 7);
  CHECK(grid[3] == 2.0);
  CHECK(grid[0] == 0.25);
  CHECK(grid[6] == 16.0);
}
