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

#include "lprff/memory.hpp"

#include "lprff/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lprff::memory {

namespace {
constexpr std::uint64_t kFullBits = 32;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kNystrom: return "nystrom";
    case Method::kRff: return "rff";
    case Method::kCirculantRff: return "circulant_rff";
    case Method::kLpRff: return "lp_rff";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto method : {Method::kNystrom, Method::kRff, Method::kCirculantRff, Method::kLpRff}) {
    if (name == to_string(method)) return method;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

MemoryFootprint footprint(Method method, const Shape& shape, std::optional<int> bits, bool strict) {
  if (shape.c < 1) throw std::invalid_argument("footprint: c must be at least 1");
  if (method == Method::kLpRff) {
    if (!bits || !quantize::supported_bits(*bits)) {
      throw std::invalid_argument("footprint: lp_rff needs b in {1, 2, 4, 8, 16}");
    }
  } else if (bits) {
    throw std::invalid_argument("footprint: precision only applies to lp_rff");
  }
  const auto [m, d, s, c] = shape;
  MemoryFootprint f;
  f.params_bits = kFullBits * m * c;
  switch (method) {
    case Method::kNystrom:
      f.feature_gen_bits = kFullBits * (m * d + m * m);
      f.batch_bits = kFullBits * m * s;
      break;
    case Method::kRff:
      f.feature_gen_bits = kFullBits * m * d;
      f.batch_bits = kFullBits * m * s;
      break;
    case Method::kCirculantRff:
      f.feature_gen_bits = kFullBits * m + (strict ? m : 0);
      f.batch_bits = kFullBits * m * s;
      break;
    case Method::kLpRff:
      f.feature_gen_bits = kFullBits * m + (strict ? m : 0);
      f.batch_bits = static_cast<std::uint64_t>(*bits) * m * s;
      break;
  }
  f.total_bits = f.feature_gen_bits + f.batch_bits + f.params_bits;
  return f;
}

std::uint64_t max_features_within(Method method, Shape shape, std::uint64_t budget_bits,
                                  std::optional<int> bits) {
  // Footprints are non-decreasing in m, so binary search.
  std::uint64_t lo = 0, hi = 1;
  auto fits = [&](std::uint64_t m) {
    shape.m = m;
    return footprint(method, shape, bits).total_bits <= budget_bits;
  };
  while (fits(hi)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const auto mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

double compression_ratio(const std::vector<Run>& baseline, const std::vector<Run>& lp,
                         double rel_tolerance) {
  if (baseline.empty()) throw std::invalid_argument("compression_ratio: no baseline runs");
  const double best = std::min_element(baseline.begin(), baseline.end(), [](const Run& a, const Run& b) {
                        return a.metric < b.metric;
                      })->metric;
  const double limit = best + rel_tolerance * std::abs(best);
  auto smallest = [&](const std::vector<Run>& runs) {
    std::uint64_t out = std::numeric_limits<std::uint64_t>::max();
    for (const auto& run : runs) {
      if (run.metric <= limit) out = std::min(out, run.total_bits);
    }
    return out;
  };
  const auto base_bits = smallest(baseline);
  const auto lp_bits = smallest(lp);
  if (lp_bits == std::numeric_limits<std::uint64_t>::max()) {
    throw std::invalid_argument("compression_ratio: no low-precision run within tolerance of the best baseline");
  }
  return static_cast<double>(base_bits) / static_cast<double>(lp_bits);
}

}  // namespace lprff::memory
