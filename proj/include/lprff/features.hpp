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

#pragma once

#include "lprff/common.hpp"
#include "lprff/kernel.hpp"

#include <iosfwd>
#include <optional>
#include <variant>

namespace lprff::features {

enum class Parametrization { kCos, kSinCos };

/// Random Fourier features z(x) = sqrt(2/m) cos(Wx + a). With kSinCos the m
/// outputs are m/2 (cos, sin) pairs; rows of W come in identical pairs and
/// the phases are zero.
struct RffMap {
  double gamma = 1.0;
  Matrix w;       // m x d
  Vector phases;  // m
  Parametrization parametrization = Parametrization::kCos;
  std::uint64_t seed = 0;

  Index features() const { return w.rows(); }
  Index input_dim() const { return w.cols(); }
};

/// RFFs whose projection is a stack of ceil(m/d) independent d x d circulant
/// blocks (row r of a block is its base vector cyclically shifted by r),
/// truncated to m rows and sign-flipped row-wise by a Rademacher vector.
struct CirculantRffMap {
  double gamma = 1.0;
  Matrix bases;   // blocks x d, one base vector per row
  Vector signs;   // m, entries +-1
  Vector phases;  // m
  Index m = 0;
  std::uint64_t seed = 0;

  Index features() const { return m; }
  Index input_dim() const { return bases.cols(); }
  Index blocks() const { return bases.rows(); }

  /// Materialized m x d projection, for inspection and tests.
  Matrix effective_w() const;
};

/// Nystrom features z(x) = Lambda^{-1/2} U^T k_x from the eigendecomposition
/// of the landmark Gram matrix, keeping eigenpairs above `eig_threshold`.
struct NystromMap {
  double gamma = 1.0;
  Matrix landmarks;     // m x d
  Matrix basis;         // m x r (U)
  Vector eigenvalues;   // r, descending, all > eig_threshold
  double eig_threshold = 0.0;
  std::uint64_t seed = 0;

  Index landmark_count() const { return landmarks.rows(); }
  Index features() const { return basis.cols(); }
  Index input_dim() const { return landmarks.cols(); }
};

using FeatureMap = std::variant<RffMap, CirculantRffMap, NystromMap>;

RffMap sample_rff(const kernel::GaussianKernel& k, Index m, Index d, std::uint64_t seed,
                  Parametrization parametrization = Parametrization::kCos);

CirculantRffMap sample_circulant_rff(const kernel::GaussianKernel& k, Index m, Index d,
                                     std::uint64_t seed);

/// Landmarks drawn uniformly without replacement from the rows of `train`.
/// Without an explicit threshold, eigenvalues <= 1e-12 * lambda_max are dropped.
NystromMap sample_nystrom(const Matrix& train, const kernel::GaussianKernel& k, Index m,
                          std::uint64_t seed,
                          std::optional<double> eig_threshold = std::nullopt);

Matrix apply(const RffMap& map, const Matrix& xb);
Matrix apply(const CirculantRffMap& map, const Matrix& xb);
Matrix apply(const NystromMap& map, const Matrix& xb);
Matrix apply(const FeatureMap& map, const Matrix& xb);

/// Output dimension (r for Nystrom, m otherwise).
Index output_dim(const FeatureMap& map);
Index input_dim(const FeatureMap& map);

/// True for maps whose outputs lie in [-sqrt(2/m), sqrt(2/m)].
bool is_fourier(const FeatureMap& map);

// Versioned binary blob: magic "LPFM", u32 version, u32 type tag, u64 m,
// u64 d, u64 seed, f64 gamma, then type-specific payload (little-endian).
void save(const FeatureMap& map, std::ostream& out);
FeatureMap load(std::istream& in);

}  // namespace lprff::features
