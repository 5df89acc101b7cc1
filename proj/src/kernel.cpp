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

#include "lprff/kernel.hpp"

#include <cmath>

namespace lprff::kernel {

namespace {

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(name) + " contains non-finite values");
}

void require_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("matrix is not symmetric");
  }
}

}  // namespace

GaussianKernel::GaussianKernel(double gamma) : gamma_(gamma) {
  if (!(std::isfinite(gamma) && gamma > 0.0)) {
    throw std::invalid_argument("Gaussian kernel gamma must be finite and positive");
  }
}

double GaussianKernel::operator()(const Vector& x, const Vector& y) const {
  return std::exp(-gamma_ * (x - y).squaredNorm());
}

Matrix gram(const GaussianKernel& k, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("gram: inputs differ in dimension");
  require_finite(a, "gram: A");
  require_finite(b, "gram: B");
  const Vector a_sq = a.rowwise().squaredNorm();
  const Vector b_sq = b.rowwise().squaredNorm();
  Matrix dist = -2.0 * a * b.transpose();
  dist.colwise() += a_sq;
  dist.rowwise() += b_sq.transpose();
  return (-k.gamma() * dist.cwiseMax(0.0)).array().exp().matrix();
}

Matrix gram(const GaussianKernel& k, const Matrix& a) {
  Matrix g = gram(k, a, a);
  // Exact symmetry and unit diagonal; the expanded-distance form leaves
  // round-off on both.
  g = 0.5 * (g + g.transpose()).eval();
  g.diagonal().setOnes();
  return g;
}

SymEig sym_eig(const Matrix& m) {
  require_symmetric(m);
  require_finite(m, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig failed to converge");
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Vector sym_eigenvalues(const Matrix& m) {
  require_symmetric(m);
  require_finite(m, "sym_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig failed to converge");
  return solver.eigenvalues().reverse();
}

}  // namespace lprff::kernel
