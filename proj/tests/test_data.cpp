#include <doctest.h>

#include <set>

#include "iklr/data.hpp"
#include "test_support.hpp"

using iklr::Dataset;
using iklr::Index;
using testsupport::TempDir;

TEST_CASE("load_dataset parses labels and features") {
  TempDir tmp;
  const auto d = iklr::load_dataset(tmp.write("a.csv", "1,0.5,0.2\n-1,0.1,0.9\n"));
  CHECK(d.n() == 2);
  CHECK(d.m() == 2);
  CHECK(d.labels[0] == 1.0);
  CHECK(d.labels[1] == -1.0);
  CHECK(d.features(0, 0) == 0.5);
  CHECK(d.features(1, 1) == 0.9);
}

TEST_CASE("load_dataset maps 0/1 labels to -1/+1") {
  TempDir tmp;
  const auto d = iklr::load_dataset(tmp.write("a.csv", "0,0.5\n1,0.6\n"));
  CHECK(d.labels[0] == -1.0);
  CHECK(d.labels[1] == 1.0);
}

TEST_CASE("load_dataset accepts explicitly signed labels") {
  TempDir tmp;
  const auto d = iklr::load_dataset(tmp.write("a.csv", "+1,0.5\n-1,0.6\n"));
  CHECK(d.labels[0] == 1.0);
  CHECK(d.labels[1] == -1.0);
}

TEST_CASE("load_dataset rejects labels outside -1/0/1") {
  TempDir tmp;
  CHECK_THROWS_WITH_AS(iklr::load_dataset(tmp.write("a.csv", "2,0.5\n")),
                       doctest::Contains("invalid label"), std::runtime_error);
}

TEST_CASE("load_dataset reports parse location and ragged rows") {
  TempDir tmp;
  CHECK_THROWS_WITH_AS(iklr::load_dataset(tmp.write("a.csv", "1,0.5\n-1,x\n")), doctest::Contains(":2:2"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(iklr::load_dataset(tmp.write("b.csv", "1,0.5,0.2\n-1,0.1\n")),
                       doctest::Contains("expected"), std::runtime_error);
  CHECK_THROWS_AS(iklr::load_dataset(tmp.file("missing.csv")), std::runtime_error);
}

TEST_CASE("fit_normalizer computes per-feature min and range") {
  Dataset<double> d;
  d.features.resize(2, 2);
  d.features << 0, 2, 1, 4;
  d.labels.resize(2);
  d.labels << 1, -1;
  const auto p = iklr::fit_normalizer(d);
  CHECK(p.minimum[0] == 0.0);
  CHECK(p.minimum[1] == 2.0);
  CHECK(p.range[0] == 1.0);
  CHECK(p.range[1] == 2.0);
}

TEST_CASE("fit_normalizer on a single row gives zero ranges") {
  Dataset<double> d;
  d.features.resize(1, 2);
  d.features << 3, 3;
  d.labels.resize(1);
  d.labels << 1;
  const auto p = iklr::fit_normalizer(d);
  CHECK(p.minimum[0] == 3.0);
  CHECK(p.range[0] == 0.0);
  CHECK(p.range[1] == 0.0);
}

TEST_CASE("fit_normalizer is the identity map for full-range [0,1] data") {
  Dataset<double> d;
  d.features.resize(2, 2);
  d.features << 0, 0, 1, 1;
  d.labels.resize(2);
  d.labels << 1, -1;
  const auto p = iklr::fit_normalizer(d);
  CHECK(p.minimum.isZero(0));
  CHECK(p.range[0] == 1.0);
  CHECK(p.range[1] == 1.0);
}

TEST_CASE("apply_normalizer maps, zero-range features to 0, no clamping") {
  iklr::NormParams<double> p;
  p.minimum.resize(2);
  p.minimum << 0, 2;
  p.range.resize(2);
  p.range << 1, 2;

  iklr::Matrix<double> x(1, 2);
  x << 0.5, 3;
  auto out = iklr::apply_normalizer(p, x);
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == 0.5);

  x << 0, 2;  // equal to the min vector
  out = iklr::apply_normalizer(p, x);
  CHECK(out(0, 0) == 0.0);
  CHECK(out(0, 1) == 0.0);

  x << -1, 2;  // below the train minimum: stays negative
  out = iklr::apply_normalizer(p, x);
  CHECK(out(0, 0) == -1.0);
  CHECK(out(0, 1) == 0.0);

  p.range[1] = 0;  // zero-range feature maps to 0
  x << 0.5, 7;
  out = iklr::apply_normalizer(p, x);
  CHECK(out(0, 1) == 0.0);

  iklr::Matrix<double> wrong(1, 3);
  wrong.setZero();
  CHECK_THROWS_AS(iklr::apply_normalizer(p, wrong), std::invalid_argument);
}

TEST_CASE("normalizing the training set itself lands in [0,1]") {
  iklr::Rng rng(7);
  Dataset<double> d;
  d.features = testsupport::random_symmetric(rng, 13);  // any rectangular-ish values
  d.labels = testsupport::random_labels(rng, 13);
  const auto norm = iklr::apply_normalizer(iklr::fit_normalizer(d), d);
  CHECK(norm.features.minCoeff() >= 0.0);
  CHECK(norm.features.maxCoeff() <= 1.0);
}

namespace {

Dataset<double> toy_dataset(Index n) {
  Dataset<double> d;
  d.features.resize(n, 1);
  d.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    d.features(i, 0) = static_cast<double>(i);
    d.labels[i] = i % 2 == 0 ? 1.0 : -1.0;
  }
  return d;
}

}  // namespace

TEST_CASE("split produces the ceil rule sizes") {
  const auto [train, test] = iklr::split(toy_dataset(10), 0.5, 1);
  CHECK(train.n() == 5);
  CHECK(test.n() == 5);

  const auto [train3, test3] = iklr::split(toy_dataset(3), 0.5, 1);
  CHECK(train3.n() == 2);
  CHECK(test3.n() == 1);
}

TEST_CASE("split is deterministic for a fixed seed and partitions the data") {
  const auto data = toy_dataset(11);
  const auto [a_train, a_test] = iklr::split(data, 0.6, 42);
  const auto [b_train, b_test] = iklr::split(data, 0.6, 42);
  CHECK(testsupport::bitwise_equal(a_train.features, b_train.features));
  CHECK(testsupport::bitwise_equal(a_test.features, b_test.features));
  CHECK(testsupport::bitwise_equal(a_train.labels, b_train.labels));

  std::set<double> values;
  for (Index i = 0; i < a_train.n(); ++i) values.insert(a_train.features(i, 0));
  for (Index i = 0; i < a_test.n(); ++i) values.insert(a_test.features(i, 0));
  CHECK(values.size() == 11);  // disjoint union of all indices

  const auto [c_train, c_test] = iklr::split(data, 0.6, 43);
  CHECK_FALSE(testsupport::bitwise_equal(a_train.features, c_train.features));
}

TEST_CASE("split retries and fails when one class cannot be represented") {
  Dataset<double> d = toy_dataset(6);
  d.labels.setConstant(1.0);
  CHECK_THROWS_AS(iklr::split(d, 0.5, 0), std::runtime_error);
}

TEST_CASE("split guarantees both classes in the train side") {
  Dataset<double> d = toy_dataset(12);
  d.labels.setConstant(1.0);
  d.labels[3] = -1.0;  // a single negative forces retries for many seeds
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [train, test] = iklr::split(d, 0.5, seed);
    CHECK(iklr::has_both_classes(train.labels));
  }
}

TEST_CASE("kfold fold sizes and error cases") {
  const auto folds10 = iklr::kfold(toy_dataset(10), 10, 3);
  CHECK(folds10.size() == 10);
  for (const auto& f : folds10) CHECK(f.validation.size() == 1);

  const auto folds5 = iklr::kfold(toy_dataset(10), 5, 3);
  for (const auto& f : folds5) CHECK(f.validation.size() == 2);

  CHECK_THROWS_AS(iklr::kfold(toy_dataset(3), 5, 3), std::invalid_argument);
}

TEST_CASE("rng streams are pinned and reproducible") {
  iklr::Rng a(42), b(42);
  CHECK(a.next_u64() == 13930160852258120406ULL);  // mt19937_64 reference value
  CHECK(b.next_u64() == 13930160852258120406ULL);

  iklr::Rng c(7), d(7);
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7}, v2 = v1;
  c.shuffle(v1);
  d.shuffle(v2);
  CHECK(v1 == v2);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.below(13) < 13);
  }
}

TEST_CASE("kfold validation folds partition the index set") {
  const auto data = toy_dataset(23);
  const auto folds = iklr::kfold(data, 4, 9);
  std::set<Index> seen;
  for (const auto& f : folds) {
    for (Index i : f.validation) {
      CHECK(seen.insert(i).second);  // pairwise disjoint
    }
    CHECK(f.train.size() + f.validation.size() == 23);
  }
  CHECK(seen.size() == 23);

  const auto again = iklr::kfold(data, 4, 9);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    CHECK(folds[f].validation == again[f].validation);
    CHECK(folds[f].train == again[f].train);
  }
}
