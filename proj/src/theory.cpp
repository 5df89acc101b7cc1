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

#include "lprff/theory.hpp"

#include "lprff/kernel.hpp"
#include "lprff/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lprff::theory {

double quantization_variance(int bits) {
  return bits == kFullPrecision ? 0.0 : quantize::delta_b_sq(bits);
}

Vector ridge_fit(const Matrix& k, const Vector& y, double lambda) {
  if (k.rows() != k.cols() || k.rows() != y.size()) throw std::invalid_argument("ridge_fit: shape mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_fit: lambda must be positive");
  Matrix system = k;
  system.diagonal().array() += lambda;
  Eigen::LDLT<Matrix> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge_fit: factorization failed");
  Vector alpha = ldlt.solve(y);
  const double scale = std::max(y.norm(), std::numeric_limits<double>::min());
  if (!alpha.allFinite() || (system * alpha - y).norm() > 1e-10 * scale) {
    throw NumericalError("ridge_fit: system is singular to working precision");
  }
  return alpha;
}

RiskReport risk_exact(const FixedDesignProblem& problem) {
  const Index n = problem.k.rows();
  if (problem.k.cols() != n || problem.y_bar.size() != n || n == 0) {
    throw std::invalid_argument("risk_exact: shape mismatch");
  }
  if (problem.lambda < 0.0 || problem.sigma_sq < 0.0) {
    throw std::invalid_argument("risk_exact: lambda and sigma_sq must be non-negative");
  }
  const auto eig = kernel::sym_eig(problem.k);
  const Vector proj = eig.vectors.transpose() * problem.y_bar;
  const double lambda = problem.lambda;
  const double nn = static_cast<double>(n);
  RiskReport out;
  for (Index i = 0; i < n; ++i) {
    const double ev = std::max(eig.values[i], 0.0);
    const double denom = ev + lambda;
    if (denom <= 1e-14) throw NumericalError("risk_exact: K + lambda I is singular");
    const double p2 = proj[i] * proj[i];
    out.bias_sq += lambda * lambda * p2 / (denom * denom);
    out.variance_term += ev * ev / (denom * denom);
    out.risk_hat += lambda * p2 / denom + problem.sigma_sq * ev / denom;
  }
  out.bias_sq /= nn;
  out.variance_term *= problem.sigma_sq / nn;
  out.risk_hat /= nn;
  out.risk = out.bias_sq + out.variance_term;
  return out;
}

RiskReport risk_of_approx(const Matrix& k_exact, const Matrix& k_approx, const Vector& y_bar,
                          double sigma_sq, double lambda) {
  if (k_exact.rows() != k_approx.rows() || k_exact.cols() != k_approx.cols()) {
    throw std::invalid_argument("risk_of_approx: shape mismatch");
  }
  return risk_exact({k_approx, y_bar, sigma_sq, lambda});
}

double prop1_bound(double risk_hat_exact, const metrics::SpectralDeltas& deltas, Index rank,
                   Index n, double sigma_sq) {
  if (n < 1) throw std::invalid_argument("prop1_bound: n must be positive");
  if (deltas.delta1 >= 1.0) return std::numeric_limits<double>::infinity();
  const double variance_part = deltas.delta2 / (1.0 + deltas.delta2) *
                               static_cast<double>(rank) / static_cast<double>(n) * sigma_sq;
  return risk_hat_exact / (1.0 - deltas.delta1) + variance_part;
}

double a_trace(const Vector& eigs, double lambda, int bits) {
  const double dsq = quantization_variance(bits);
  double sum = 0.0;
  for (Index i = 0; i < eigs.size(); ++i) {
    const double ev = std::max(eigs[i], 0.0);
    sum += (ev + dsq) / (ev + lambda);
  }
  return 8.0 * sum;
}

namespace {

// exp(-m t^2 / ((4n/lambda)(1 + 2t/3)))
double tail(double t, Index m, Index n, double lambda) {
  const double scale = 4.0 * static_cast<double>(n) / lambda;
  return std::exp(-static_cast<double>(m) * t * t / (scale * (1.0 + 2.0 * t / 3.0)));
}

}  // namespace

Thm2Result thm2_prob_bound(const Vector& eigs, double lambda, int bits, Index m, double delta1,
                           double delta2) {
  if (eigs.size() == 0) throw std::invalid_argument("thm2_prob_bound: empty spectrum");
  const double dsq = quantization_variance(bits);
  const double top = eigs.maxCoeff();
  if (!(top >= lambda)) throw PreconditionError("thm2 assumption violated: ||K|| >= lambda");
  if (!(lambda >= dsq)) throw PreconditionError("thm2 assumption violated: lambda >= delta_b^2");
  if (!(delta1 >= 0.0)) throw PreconditionError("thm2 assumption violated: delta1 >= 0");
  if (!(delta2 >= dsq / lambda)) {
    throw PreconditionError("thm2 assumption violated: delta2 >= delta_b^2 / lambda");
  }
  const Index n = eigs.size();
  Thm2Result out;
  out.a_trace = a_trace(eigs, lambda, bits);
  const double failure = out.a_trace * (tail(delta1, m, n, lambda) + tail(delta2 - dsq / lambda, m, n, lambda));
  out.prob = std::clamp(1.0 - failure, 0.0, 1.0);
  return out;
}

std::int64_t corollary_feature_count(double a, Index n, double lambda, int bits,
                                     DeltaTarget target, double delta, double rho_fail) {
  if (!(rho_fail > 0.0 && rho_fail < 1.0)) throw std::invalid_argument("rho_fail must lie in (0, 1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double floor = quantization_variance(bits) / lambda;
  double gap = delta;
  if (target == DeltaTarget::kDelta1) {
    if (!(delta > 0.0 && delta <= 1.5)) throw PreconditionError("corollary needs 0 < delta1 <= 3/2");
  } else {
    if (!(delta > floor)) {
      throw PreconditionError("delta2 target at or below the quantization floor delta_b^2/lambda is unreachable");
    }
    if (delta > 1.5) throw PreconditionError("corollary needs delta2 <= 3/2");
    gap = delta - floor;
  }
  const double log_term = std::log(a / rho_fail);
  if (log_term <= 0.0) return 0;
  const double m = 8.0 * static_cast<double>(n) / lambda / (gap * gap) * log_term;
  return static_cast<std::int64_t>(std::ceil(m));
}

std::int64_t corollary_feature_count(const Vector& eigs, double lambda, int bits,
                                     DeltaTarget target, double delta, double rho_fail) {
  return corollary_feature_count(a_trace(eigs, lambda, bits), eigs.size(), lambda, bits, target,
                                 delta, rho_fail);
}

}  // namespace lprff::theory
