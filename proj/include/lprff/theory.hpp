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
#include "lprff/metrics.hpp"

#include <cstdint>

namespace lprff::theory {

/// Passed as `bits` to mean unquantized features (zero quantization variance).
inline constexpr int kFullPrecision = 0;

/// delta_b^2 for b >= 1, 0 for kFullPrecision.
double quantization_variance(int bits);

/// Fixed-design regression: y = y_bar + noise with variance sigma_sq, fit by
/// kernel ridge regression with matrix `k` and regularizer `lambda`.
struct FixedDesignProblem {
  Matrix k;
  Vector y_bar;
  double sigma_sq = 0.0;
  double lambda = 1.0;
};

struct RiskReport {
  double risk = 0.0;           // bias_sq + variance_term
  double risk_hat = 0.0;       // upper bound on risk
  double bias_sq = 0.0;        // (lambda^2/n) y^T (K + lambda I)^{-2} y
  double variance_term = 0.0;  // (sigma^2/n) tr(K^2 (K + lambda I)^{-2})
};

struct BoundReport {
  double prop1_rhs = 0.0;
  double thm2_prob = 0.0;
  double a_trace = 0.0;
  std::int64_t m_min_delta1 = 0;
  std::int64_t m_min_delta2 = 0;
};

/// Solves (K + lambda I) alpha = y. Throws NumericalError if the relative
/// residual exceeds 1e-10.
Vector ridge_fit(const Matrix& k, const Vector& y, double lambda);

/// Closed-form fixed-design risk of the KRR estimator. lambda = 0 is allowed
/// when K is nonsingular.
RiskReport risk_exact(const FixedDesignProblem& problem);

/// Risk of the estimator trained with k_approx, measured against y_bar.
RiskReport risk_of_approx(const Matrix& k_exact, const Matrix& k_approx, const Vector& y_bar,
                          double sigma_sq, double lambda);

/// R(f_{K~}) <= R^(f_K) / (1 - delta1) + delta2 / (1 + delta2) * (m / n) * sigma^2,
/// with m the rank of K~. Returns +infinity once delta1 >= 1.
double prop1_bound(double risk_hat_exact, const metrics::SpectralDeltas& deltas, Index rank,
                   Index n, double sigma_sq);

/// a = 8 tr((K + lambda I)^{-1} (K + delta_b^2 I)) from the spectrum of K.
double a_trace(const Vector& eigs, double lambda, int bits);

struct Thm2Result {
  double prob = 0.0;  // clamped to [0, 1]
  double a_trace = 0.0;
};

/// Lower bound on the probability that an m-feature b-bit LP-RFF matrix is a
/// (delta1, delta2)-spectral approximation. Throws PreconditionError naming
/// the violated assumption (||K|| >= lambda >= delta_b^2, delta1 >= 0,
/// delta2 >= delta_b^2 / lambda).
Thm2Result thm2_prob_bound(const Vector& eigs, double lambda, int bits, Index m, double delta1,
                           double delta2);

enum class DeltaTarget { kDelta1, kDelta2 };

/// Features sufficient for the requested one-sided bound to hold with
/// probability at least 1 - rho_fail.
std::int64_t corollary_feature_count(double a, Index n, double lambda, int bits,
                                     DeltaTarget target, double delta, double rho_fail);

std::int64_t corollary_feature_count(const Vector& eigs, double lambda, int bits,
                                     DeltaTarget target, double delta, double rho_fail);

}  // namespace lprff::theory
