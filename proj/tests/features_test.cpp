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

#include "lprff/features.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace lprff::features {
namespace {

using kernel::GaussianKernel;

struct McEstimate {
  double mean;
  double se;
};

// Mean and standard error of z(x)^T z(y) over independently seeded maps.
template <typename Sampler>
McEstimate kernel_estimate(Sampler sample, const Vector& x, const Vector& y, int maps) {
  Matrix xy(2, x.size());
  xy.row(0) = x.transpose();
  xy.row(1) = y.transpose();
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < maps; ++s) {
    const Matrix z = apply(sample(static_cast<std::uint64_t>(1000 + s)), xy);
    const double v = z.row(0).dot(z.row(1));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / maps;
  const double var = (sum_sq / maps - mean * mean) * maps / (maps - 1);
  return {mean, std::sqrt(var / maps)};
}

class Unbiasedness : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 gen(99);
    x5 = testing::random_matrix(5, 1, gen, 0.5).col(0);
    y5 = testing::random_matrix(5, 1, gen, 0.5).col(0);
    x8 = testing::random_matrix(8, 1, gen, 0.4).col(0);
    y8 = testing::random_matrix(8, 1, gen, 0.4).col(0);
  }
  Vector x5, y5, x8, y8;
  const GaussianKernel k{0.5};
};

TEST_F(Unbiasedness, RffCos200Maps) {
  const double exact = testing::gaussian_kernel_loop(x5, y5, k.gamma());
  const auto est = kernel_estimate([&](std::uint64_t s) { return sample_rff(k, 64, 5, s); }, x5, y5, 200);
  EXPECT_LE(std::abs(est.mean - exact), 4 * est.se) << "mean " << est.mean << " exact " << exact;
}

TEST_F(Unbiasedness, AllParametrizations500Maps) {
  const double exact5 = testing::gaussian_kernel_loop(x5, y5, k.gamma());
  const double exact8 = testing::gaussian_kernel_loop(x8, y8, k.gamma());
  const auto cos = kernel_estimate([&](auto s) { return sample_rff(k, 64, 5, s); }, x5, y5, 500);
  EXPECT_LE(std::abs(cos.mean - exact5), 4 * cos.se);
  const auto sincos = kernel_estimate(
      [&](auto s) { return sample_rff(k, 64, 5, s, Parametrization::kSinCos); }, x5, y5, 500);
  EXPECT_LE(std::abs(sincos.mean - exact5), 4 * sincos.se);
  const auto circ = kernel_estimate([&](auto s) { return sample_circulant_rff(k, 64, 8, s); }, x8, y8, 500);
  EXPECT_LE(std::abs(circ.mean - exact8), 4 * circ.se);
}

TEST_F(Unbiasedness, Circulant200Maps) {
  const double exact = testing::gaussian_kernel_loop(x8, y8, k.gamma());
  const auto est = kernel_estimate([&](auto s) { return sample_circulant_rff(k, 64, 8, s); }, x8, y8, 200);
  EXPECT_LE(std::abs(est.mean - exact), 4 * est.se);
}

TEST(SampleRff, ZeroProjectionGivesConstantKernel) {
  RffMap map;
  map.w = Matrix::Zero(7, 3);
  map.phases = Vector::Zero(7);
  std::mt19937_64 gen(1);
  const Matrix x = testing::random_matrix(4, 3, gen);
  const Matrix z = apply(map, x);
  const Matrix kz = z * z.transpose();
  EXPECT_LE((kz - Matrix::Constant(4, 4, 2.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleRff, ProjectionVarianceIsTwoGamma) {
  const auto map = sample_rff(GaussianKernel(0.5), 100000, 1, 5);
  const Vector w = map.w.col(0);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (w.size() - 1);
  EXPECT_NEAR(var, 1.0, 0.03);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_GE(map.phases.minCoeff(), 0.0);
  EXPECT_LT(map.phases.maxCoeff(), 2 * M_PI);
}

TEST(SampleRff, CosOutputsWithinRange) {
  std::mt19937_64 gen(2);
  const auto map = sample_rff(GaussianKernel(1.0), 33, 4, 8);
  const Matrix z = apply(map, testing::random_matrix(50, 4, gen, 3.0));
  const double bound = std::sqrt(2.0 / 33);
  EXPECT_LE(z.cwiseAbs().maxCoeff(), bound);
}

TEST(SampleRff, SinCosLayout) {
  EXPECT_THROW(sample_rff(GaussianKernel(1.0), 5, 2, 1, Parametrization::kSinCos), std::invalid_argument);
  const auto map = sample_rff(GaussianKernel(1.0), 6, 2, 1, Parametrization::kSinCos);
  for (Index i = 0; i < 6; i += 2) EXPECT_EQ(map.w.row(i), map.w.row(i + 1));
  EXPECT_TRUE((map.phases.array() == 0.0).all());
}

TEST(SampleRff, SinCosZeroProjection) {
  RffMap map;
  map.parametrization = Parametrization::kSinCos;
  map.w = Matrix::Zero(8, 2);
  map.phases = Vector::Zero(8);
  std::mt19937_64 gen(3);
  const Matrix z = apply(map, testing::random_matrix(3, 2, gen));
  const double s = std::sqrt(2.0 / 8);
  for (Index i = 0; i < 8; i += 2) {
    EXPECT_NEAR(z(0, i), s, 1e-15);      // cos 0
    EXPECT_NEAR(z(0, i + 1), 0.0, 1e-15);  // sin 0
  }
  EXPECT_LE(((z * z.transpose()).array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(SampleRff, Deterministic) {
  const GaussianKernel k(0.3);
  const auto a = sample_rff(k, 10, 3, 42);
  const auto b = sample_rff(k, 10, 3, 42);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.phases, b.phases);
  EXPECT_NE(a.w, sample_rff(k, 10, 3, 43).w);
  const auto c = sample_circulant_rff(k, 10, 3, 42);
  const auto d = sample_circulant_rff(k, 10, 3, 42);
  EXPECT_EQ(c.bases, d.bases);
  EXPECT_EQ(c.signs, d.signs);
}

TEST(SampleRff, DimensionMismatch) {
  const auto map = sample_rff(GaussianKernel(1.0), 4, 3, 1);
  EXPECT_THROW(apply(map, Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST(Circulant, BlockRowIsShiftedBaseTimesSign) {
  const auto map = sample_circulant_rff(GaussianKernel(0.5), 10, 4, 7);
  EXPECT_EQ(map.blocks(), 3);
  const Matrix w = map.effective_w();
  const Vector base = map.bases.row(0).transpose();
  // Row 1 of block 0: base cyclically shifted right by one.
  const Vector shifted = (Vector(4) << base[3], base[0], base[1], base[2]).finished();
  EXPECT_EQ(w.row(1).transpose(), map.signs[1] * shifted);
  // Last block truncated to m mod d = 2 rows.
  EXPECT_EQ(w.rows(), 10);
  EXPECT_EQ(w.row(8).transpose(), map.signs[8] * map.bases.row(2).transpose());
  for (Index i = 0; i < 10; ++i) EXPECT_EQ(std::abs(map.signs[i]), 1.0);
}

TEST(Circulant, ApplyMatchesDenseProjection) {
  std::mt19937_64 gen(5);
  const auto map = sample_circulant_rff(GaussianKernel(0.5), 23, 6, 9);
  const Matrix x = testing::random_matrix(12, 6, gen);
  RffMap dense;
  dense.w = map.effective_w();
  dense.phases = map.phases;
  EXPECT_LE((apply(map, x) - apply(dense, x)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Circulant, OneDimensionalMarginalMatchesRff) {
  // d = 1: every block is a scalar, so projections are i.i.d. N(0, 2 gamma).
  const auto map = sample_circulant_rff(GaussianKernel(0.5), 100000, 1, 3);
  const Vector w = map.effective_w().col(0);
  const double var = (w.array() - w.mean()).square().sum() / (w.size() - 1);
  EXPECT_NEAR(var, 1.0, 0.03);
  EXPECT_NEAR(w.mean(), 0.0, 0.02);
}

TEST(Nystrom, SingleLandmark) {
  std::mt19937_64 gen(6);
  const Matrix train = testing::random_matrix(20, 3, gen);
  const GaussianKernel k(0.4);
  const auto map = sample_nystrom(train, k, 1, 2);
  ASSERT_EQ(map.features(), 1);
  const Matrix x = testing::random_matrix(5, 3, gen);
  const Matrix z = apply(map, x);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(std::abs(z(i, 0)),
                testing::gaussian_kernel_loop(x.row(i).transpose(), map.landmarks.row(0).transpose(), 0.4),
                1e-14);
  }
}

TEST(Nystrom, FullRankReconstructsKernel) {
  std::mt19937_64 gen(7);
  const Matrix train = testing::random_matrix(30, 4, gen);
  const GaussianKernel k(0.3);
  const auto map = sample_nystrom(train, k, 30, 1);
  const Matrix z = apply(map, train);
  const Matrix exact = testing::gram_loop(train, train, 0.3);
  EXPECT_LE((z * z.transpose() - exact).norm() / exact.norm(), 1e-8);
}

TEST(Nystrom, LandmarkRowsReconstructed) {
  std::mt19937_64 gen(8);
  const Matrix train = testing::random_matrix(40, 2, gen);
  const GaussianKernel k(0.5);
  const auto map = sample_nystrom(train, k, 10, 3);
  ASSERT_EQ(map.features(), 10);
  const Matrix zl = apply(map, map.landmarks);
  const Matrix k_hat = testing::gram_loop(map.landmarks, map.landmarks, 0.5);
  EXPECT_LE((zl * zl.transpose() - k_hat).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Nystrom, DominatedByExactKernel) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix train = testing::random_matrix(32, 3, gen);
    const auto map = sample_nystrom(train, GaussianKernel(0.5), 4 + 2 * trial, trial);
    const Matrix z = apply(map, train);
    const Matrix exact = testing::gram_loop(train, train, 0.5);
    EXPECT_LE(testing::max_eigenvalue_general(z * z.transpose() - exact), 1e-8);
  }
}

TEST(Nystrom, LandmarksAreDistinctTrainRows) {
  std::mt19937_64 gen(10);
  const Matrix train = testing::random_matrix(15, 2, gen);
  const auto map = sample_nystrom(train, GaussianKernel(1.0), 15, 4);
  std::vector<bool> used(15, false);
  for (Index i = 0; i < 15; ++i) {
    Index match = -1;
    for (Index j = 0; j < 15; ++j)
      if (map.landmarks.row(i) == train.row(j)) match = j;
    ASSERT_GE(match, 0);
    EXPECT_FALSE(used[static_cast<std::size_t>(match)]);
    used[static_cast<std::size_t>(match)] = true;
  }
}

TEST(Nystrom, DropsSmallEigenvalues) {
  Matrix train = Matrix::Zero(6, 2);  // all-identical rows: rank-one Gram
  const auto map = sample_nystrom(train, GaussianKernel(1.0), 4, 1);
  EXPECT_EQ(map.features(), 1);
  EXPECT_GT(map.eigenvalues.minCoeff(), map.eig_threshold);
}

TEST(Nystrom, TooManyLandmarks) {
  EXPECT_THROW(sample_nystrom(Matrix::Zero(3, 2), GaussianKernel(1.0), 4, 1), std::invalid_argument);
}

TEST(Blob, RoundTripAllTypes) {
  std::mt19937_64 gen(11);
  const Matrix train = testing::random_matrix(12, 3, gen);
  const GaussianKernel k(0.6);
  const std::vector<FeatureMap> maps = {sample_rff(k, 6, 3, 1, Parametrization::kSinCos),
                                        sample_circulant_rff(k, 7, 3, 2), sample_nystrom(train, k, 5, 3)};
  for (const auto& map : maps) {
    std::stringstream blob;
    save(map, blob);
    const auto loaded = load(blob);
    ASSERT_EQ(loaded.index(), map.index());
    EXPECT_EQ(apply(loaded, train), apply(map, train));
  }
}

TEST(Blob, RejectsGarbage) {
  std::stringstream junk("not a blob at all");
  EXPECT_THROW(load(junk), ParseError);
  std::stringstream blob;
  save(sample_rff(GaussianKernel(1.0), 4, 2, 1), blob);
  std::string truncated = blob.str().substr(0, 30);
  std::stringstream cut(truncated);
  EXPECT_THROW(load(cut), ParseError);
}

}  // namespace
}  // namespace lprff::features
