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

namespace lprff::kernel {

/// k(x, y) = exp(-gamma * |x - y|^2), i.e. gamma = 1 / (2 sigma^2).
class GaussianKernel {
 public:
  explicit GaussianKernel(double gamma);
  double gamma() const noexcept { return gamma_; }
  double operator()(const Vector& x, const Vector& y) const;

 private:
  double gamma_;
};

/// p x q matrix of kernel values between the rows of a and b.
Matrix gram(const GaussianKernel& k, const Matrix& a, const Matrix& b);

/// Symmetric Gram matrix of the rows of a.
Matrix gram(const GaussianKernel& k, const Matrix& a);

struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values[i]
};

/// Dense symmetric eigendecomposition, eigenvalues sorted descending.
/// Rejects inputs that are asymmetric beyond 1e-10 relative to max |entry|.
SymEig sym_eig(const Matrix& m);

/// Eigenvalues only, descending.
Vector sym_eigenvalues(const Matrix& m);

}  // namespace lprff::kernel
