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

#include "lprff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lprff::metrics {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw std::invalid_argument("kernel matrices must be square and equally sized");
  }
}

}  // namespace

ErrorNorms error_norms(const Matrix& k, const Matrix& k_approx) {
  require_same_shape(k, k_approx);
  const Matrix diff = k - k_approx;
  ErrorNorms out;
  out.frob_sq = diff.squaredNorm();
  if (diff.size() > 0) out.spectral = kernel::sym_eigenvalues(0.5 * (diff + diff.transpose())).cwiseAbs().maxCoeff();
  return out;
}

DeltaEvaluator::DeltaEvaluator(const Matrix& k) : DeltaEvaluator(k, kernel::sym_eig(k)) {}

DeltaEvaluator::DeltaEvaluator(const Matrix& k, kernel::SymEig eig) : k_(k), eig_(std::move(eig)) {
  if (k.rows() != k.cols() || eig_.values.size() != k.rows()) {
    throw std::invalid_argument("DeltaEvaluator: eigendecomposition does not match K");
  }
}

Vector DeltaEvaluator::whitened_spectrum(const Matrix& k_approx, double lambda) const {
  require_same_shape(k_, k_approx);
  if (!(lambda > 0.0)) throw std::invalid_argument("spectral_deltas: lambda must be positive");
  if (eig_.values.size() == 0) return Vector();
  if (eig_.values.minCoeff() + lambda <= 1e-14) {
    throw NumericalError("K + lambda I is numerically singular");
  }
  const Vector scale = (eig_.values.cwiseMax(0.0).array() + lambda).rsqrt();
  const Matrix whiten = eig_.vectors * scale.asDiagonal() * eig_.vectors.transpose();
  Matrix a = whiten * (k_approx - k_) * whiten;
  a = 0.5 * (a + a.transpose()).eval();
  return kernel::sym_eigenvalues(a);
}

SpectralDeltas DeltaEvaluator::operator()(const Matrix& k_approx, double lambda) const {
  const Vector spectrum = whitened_spectrum(k_approx, lambda);
  SpectralDeltas out;
  out.lambda = lambda;
  if (spectrum.size() == 0) return out;
  out.delta1 = std::max(0.0, -spectrum[spectrum.size() - 1]);
  out.delta2 = std::max(0.0, spectrum[0]);
  out.delta = std::max(out.delta1, out.delta2);
  return out;
}

SpectralDeltas spectral_deltas(const Matrix& k, const Matrix& k_approx, double lambda) {
  require_same_shape(k, k_approx);
  return DeltaEvaluator(k)(k_approx, lambda);
}

double delta1_rank_floor(const Vector& eigs_desc, Index m, double lambda) {
  if (m < 0) throw std::invalid_argument("delta1_rank_floor: negative rank");
  if (m >= eigs_desc.size()) return 0.0;
  const double next = std::max(0.0, eigs_desc[m]);
  return next / (next + lambda);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman_rho: need at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman_rho: constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace lprff::metrics
