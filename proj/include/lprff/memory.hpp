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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lprff::memory {

enum class Method { kNystrom, kRff, kCirculantRff, kLpRff };

std::string_view to_string(Method method);
/// Accepts nystrom, rff, circulant_rff, lp_rff.
Method parse_method(std::string_view name);

/// Training memory in bits: feature generation state, the mini-batch of
/// features, and the model parameters. Input and label batches are excluded.
struct MemoryFootprint {
  std::uint64_t feature_gen_bits = 0;
  std::uint64_t batch_bits = 0;
  std::uint64_t params_bits = 0;
  std::uint64_t total_bits = 0;

  friend bool operator==(const MemoryFootprint&, const MemoryFootprint&) = default;
};

struct Shape {
  std::uint64_t m = 0;  // features
  std::uint64_t d = 0;  // input dimension
  std::uint64_t s = 0;  // mini-batch size
  std::uint64_t c = 1;  // outputs (1 for regression / binary)
};

/// Full-precision numbers are 32 bits. `bits` is required for kLpRff only.
/// `strict` also charges the m Rademacher sign bits of circulant projections.
MemoryFootprint footprint(Method method, const Shape& shape, std::optional<int> bits = std::nullopt,
                          bool strict = false);

/// Largest m whose footprint fits in `budget_bits` (0 if none does).
std::uint64_t max_features_within(Method method, Shape shape, std::uint64_t budget_bits,
                                  std::optional<int> bits = std::nullopt);

struct Run {
  std::uint64_t total_bits = 0;
  double metric = 0.0;  // lower is better (error or MSE)
};

/// Smallest qualifying baseline footprint over smallest qualifying LP
/// footprint, where a run qualifies when its metric is within
/// `rel_tolerance` (relative) of the best baseline metric.
double compression_ratio(const std::vector<Run>& baseline, const std::vector<Run>& lp,
                         double rel_tolerance = 1e-4);

}  // namespace lprff::memory
