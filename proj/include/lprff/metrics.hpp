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

#include <span>
#include <vector>

namespace lprff::metrics {

struct ErrorNorms {
  double frob_sq = 0.0;   // sum of squared entries of K - K~
  double spectral = 0.0;  // largest |eigenvalue| of K - K~
};

ErrorNorms error_norms(const Matrix& k, const Matrix& k_approx);

/// Smallest (delta1, delta2) >= 0 with
/// (1 - delta1)(K + lambda I) <= K~ + lambda I <= (1 + delta2)(K + lambda I).
struct SpectralDeltas {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta = 0.0;  // max(delta1, delta2)
  double lambda = 0.0;
};

/// Caches the eigendecomposition of K; reusable across approximations and
/// regularizers.
class DeltaEvaluator {
 public:
  explicit DeltaEvaluator(const Matrix& k);
  DeltaEvaluator(const Matrix& k, kernel::SymEig eig);

  /// Throws NumericalError when lambda_min(K) + lambda <= 1e-14.
  SpectralDeltas operator()(const Matrix& k_approx, double lambda) const;

  /// Eigenvalues of A = (K + lambda I)^{-1/2} (K~ - K) (K + lambda I)^{-1/2},
  /// descending.
  Vector whitened_spectrum(const Matrix& k_approx, double lambda) const;

  const Vector& eigenvalues() const noexcept { return eig_.values; }
  Index size() const noexcept { return k_.rows(); }

 private:
  Matrix k_;
  kernel::SymEig eig_;
};

SpectralDeltas spectral_deltas(const Matrix& k, const Matrix& k_approx, double lambda);

/// Weyl lower bound on delta1 for an approximation of rank m:
/// lambda_{m+1}(K) / (lambda_{m+1}(K) + lambda), or 0 when m >= n.
double delta1_rank_floor(const Vector& eigs_desc, Index m, double lambda);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws for k < 2, length mismatch,
/// or a constant sequence.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

}  // namespace lprff::metrics
