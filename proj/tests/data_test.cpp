// Copyright 2026 The lprff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lprff/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

namespace lprff::data {
namespace {

namespace fs = std::filesystem;

class TempFile {
 public:
  explicit TempFile(const std::string& contents, const std::string& ext = ".txt") {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("lprff_data_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ext);
    std::ofstream(path_) << contents;
  }
  ~TempFile() { fs::remove(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Dataset make(std::initializer_list<std::initializer_list<double>> rows,
             std::initializer_list<double> labels) {
  Dataset ds;
  ds.x = Matrix(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (auto row : rows) {
    Index j = 0;
    for (double v : row) ds.x(i, j++) = v;
    ++i;
  }
  ds.labels = Vector(static_cast<Index>(labels.size()));
  i = 0;
  for (double l : labels) ds.labels[i++] = l;
  return ds;
}

TEST(LoadLibsvm, DenseFromSparse) {
  TempFile f("1 1:2.0\n-1 2:3.0\n");
  const auto ds = load_libsvm(f.path());
  ASSERT_EQ(ds.size(), 2);
  ASSERT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.x(0, 0), 2.0);
  EXPECT_EQ(ds.x(0, 1), 0.0);
  EXPECT_EQ(ds.x(1, 0), 0.0);
  EXPECT_EQ(ds.x(1, 1), 3.0);
  EXPECT_EQ(ds.labels[0], 1.0);
  EXPECT_EQ(ds.labels[1], -1.0);
}

TEST(LoadLibsvm, InfersDimensionFromMaxIndex) {
  TempFile f("0.5 3:1.0\n");
  const auto ds = load_libsvm(f.path());
  ASSERT_EQ(ds.dim(), 3);
  EXPECT_EQ(ds.x.row(0), (Vector(3) << 0, 0, 1).finished().transpose());
  EXPECT_EQ(ds.labels[0], 0.5);
}

TEST(LoadLibsvm, RejectsDecreasingIndex) {
  TempFile f("1 2:1 1:1\n");
  try {
    load_libsvm(f.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(LoadLibsvm, ReportsLineOfMalformedEntry) {
  TempFile f("1 1:1\n2 1:x\n");
  try {
    load_libsvm(f.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  TempFile g("1 1:1\n1 3\n");
  EXPECT_THROW(load_libsvm(g.path()), ParseError);
}

TEST(LoadCsv, LabelFirst) {
  TempFile f("1.5,2,3\n-2,4,5\n", ".csv");
  const auto ds = load_csv(f.path());
  ASSERT_EQ(ds.size(), 2);
  ASSERT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.labels[1], -2.0);
  EXPECT_EQ(ds.x(1, 1), 5.0);
  TempFile ragged("1,2\n1,2,3\n", ".csv");
  EXPECT_THROW(load_csv(ragged.path()), ParseError);
}

TEST(ToClassification, SortedClassIndices) {
  auto ds = to_classification(make({{0}, {0}, {0}}, {5, -1, 5}));
  EXPECT_EQ(ds.num_classes, 2);
  EXPECT_EQ(ds.labels[0], 1.0);
  EXPECT_EQ(ds.labels[1], 0.0);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Normalize, BinaryColumnUntouched) {
  const auto out = normalize(make({{0}, {1}, {1}, {0}}, {0, 0, 0, 0}), {});
  EXPECT_EQ(out.train.x.col(0), (Vector(4) << 0, 1, 1, 0).finished());
  EXPECT_TRUE(out.stats.binary[0]);
  EXPECT_EQ(out.stats.mean[0], 0.0);
  EXPECT_EQ(out.stats.stddev[0], 1.0);
}

TEST(Normalize, TwoPointStandardization) {
  const auto out = normalize(make({{1}, {3}}, {2, 4}), {make({{5}}, {0})});
  EXPECT_DOUBLE_EQ(out.train.x(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out.train.x(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(out.stats.stddev[0], 1.0);
  EXPECT_DOUBLE_EQ(out.train.labels[0], -1.0);
  EXPECT_DOUBLE_EQ(out.train.labels[1], 1.0);
  // Heldout uses train statistics.
  EXPECT_DOUBLE_EQ(out.others[0].x(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.others[0].labels[0], -3.0);
}

TEST(Normalize, ZeroVarianceColumnCenteredOnly) {
  const auto out = normalize(make({{7}, {7}}, {0, 0}), {});
  EXPECT_EQ(out.train.x(0, 0), 0.0);
  EXPECT_TRUE(out.train.x.allFinite());
}

TEST(Normalize, ClassificationLabelsUntouched) {
  auto ds = to_classification(make({{1}, {3}}, {1, 0}));
  const auto out = normalize(ds, {});
  EXPECT_EQ(out.train.labels, ds.labels);
}

TEST(Normalize, Idempotent) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::bernoulli_distribution coin(0.3);
  Dataset ds;
  ds.x = Matrix(50, 4);
  ds.labels = Vector(50);
  for (Index i = 0; i < 50; ++i) {
    ds.x(i, 0) = normal(gen);
    ds.x(i, 1) = coin(gen) ? 1.0 : 0.0;
    ds.x(i, 2) = normal(gen) * 10;
    ds.x(i, 3) = 4.0;
    ds.labels[i] = normal(gen);
  }
  const auto once = normalize(ds, {});
  const auto twice = normalize(once.train, {});
  EXPECT_LE((once.train.x - twice.train.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((once.train.labels - twice.train.labels).cwiseAbs().maxCoeff(), 1e-12);
  // Statistics re-applied to the raw data reproduce the normalized train set.
  EXPECT_LE((apply_normalization(ds, once.stats).x - once.train.x).cwiseAbs().maxCoeff(), 1e-12);
}

Dataset numbered(Index n) {
  Dataset ds;
  ds.x = Matrix(n, 1);
  ds.labels = Vector(n);
  for (Index i = 0; i < n; ++i) ds.x(i, 0) = ds.labels[i] = static_cast<double>(i);
  return ds;
}

TEST(SplitHeldout, Sizes) {
  const auto [rest, held] = split_heldout(numbered(10), 0.1, 7);
  EXPECT_EQ(rest.size(), 9);
  EXPECT_EQ(held.size(), 1);
}

TEST(SplitHeldout, DeterministicGivenSeed) {
  const auto a = split_heldout(numbered(40), 0.25, 11);
  const auto b = split_heldout(numbered(40), 0.25, 11);
  EXPECT_EQ(a.second.x, b.second.x);
  EXPECT_EQ(a.first.x, b.first.x);
  const auto c = split_heldout(numbered(40), 0.25, 12);
  EXPECT_NE(a.second.x, c.second.x);
}

TEST(SplitHeldout, RejectsEmptyPart) {
  // round(0.999 * 2) = 2 leaves no training rows.
  EXPECT_THROW(split_heldout(numbered(2), 0.999, 1), std::invalid_argument);
  EXPECT_THROW(split_heldout(numbered(10), 0.01, 1), std::invalid_argument);
  EXPECT_THROW(split_heldout(numbered(1), 0.5, 1), std::invalid_argument);
  // round(0.5 * 2) = 1 is fine; half rounds away from zero: round(0.25 * 10) = 3.
  EXPECT_EQ(split_heldout(numbered(2), 0.5, 1).second.size(), 1);
  EXPECT_EQ(split_heldout(numbered(10), 0.25, 1).second.size(), 3);
}

TEST(SplitHeldout, PartitionIsExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [rest, held] = split_heldout(numbered(37), 0.3, seed);
    std::vector<double> all;
    for (Index i = 0; i < rest.size(); ++i) all.push_back(rest.x(i, 0));
    for (Index i = 0; i < held.size(); ++i) all.push_back(held.x(i, 0));
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), 37u);
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], static_cast<double>(i));
  }
}

TEST(Dataset, ValidateCatchesMismatch) {
  Dataset ds = numbered(3);
  ds.labels = Vector::Zero(2);
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  ds = to_classification(numbered(3));
  ds.labels[0] = 3;
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace lprff::data
