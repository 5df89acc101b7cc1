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
#include "lprff/rng.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace lprff::quantize {

/// Precisions accepted for packed storage.
bool supported_bits(int bits) noexcept;

/// Quantization variance scale 2 / (2^b - 1)^2.
double delta_b_sq(int bits);

/// Uniform grid of 2^b levels on [-sqrt(2/m), sqrt(2/m)].
class Quantizer {
 public:
  Quantizer(int bits, Index features);

  int bits() const noexcept { return bits_; }
  Index features() const noexcept { return features_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double step() const noexcept { return step_; }
  std::uint32_t max_code() const noexcept { return max_code_; }
  double value(std::uint32_t code) const noexcept { return lo_ + code * step_; }

 private:
  int bits_;
  Index features_;
  double lo_;
  double hi_;
  double step_;
  std::uint32_t max_code_;
};

/// `rows` x `features` codes of `bits` bits each, packed LSB-first into
/// 64-bit words in row-major order. Since bits divides 64 no code straddles
/// a word boundary.
class PackedBlock {
 public:
  PackedBlock(int bits, Index features, Index rows);

  /// Adopts existing storage; throws if the word count does not match.
  static PackedBlock from_words(int bits, Index features, Index rows,
                                std::vector<std::uint64_t> words);

  int bits() const noexcept { return bits_; }
  Index features() const noexcept { return features_; }
  Index rows() const noexcept { return rows_; }
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  std::uint32_t code(Index row, Index col) const noexcept;
  void set_code(Index row, Index col, std::uint32_t code) noexcept;

  /// Payload bits b*m*s, the quantity the memory accountant charges.
  std::uint64_t payload_bits() const noexcept;
  /// Physical bits, 64 * ceil(b*m*s / 64).
  std::uint64_t storage_bits() const noexcept { return 64ULL * words_.size(); }

  friend bool operator==(const PackedBlock&, const PackedBlock&) = default;

 private:
  int bits_;
  Index features_;
  Index rows_;
  std::vector<std::uint64_t> words_;
};

/// Per-feature [lo, hi] ranges for quantizing Nystrom features, which have
/// no a-priori bound.
struct NystromQuantizer {
  Vector lo;
  Vector hi;
  int bits = 8;

  /// Column-wise min/max over training features.
  static NystromQuantizer fit(const Matrix& train_features, int bits);
  double step(Index feature) const;
};

/// Unbiased stochastic rounding of RFF-range features onto the b-bit grid.
/// Noise is a pure function of (seed, stream, entry index).
/// Throws RangeError for entries outside [lo, hi] by more than 1e-12.
PackedBlock quantize_stochastic(const Matrix& block, int bits, std::uint64_t seed,
                                rng::StreamId stream);

Matrix dequantize(const PackedBlock& packed);

/// Per-feature grid; out-of-range entries are clamped first. Degenerate
/// features (hi == lo) store code 0.
PackedBlock quantize_nystrom(const Matrix& block, const NystromQuantizer& q, std::uint64_t seed,
                             rng::StreamId stream);

Matrix dequantize(const PackedBlock& packed, const NystromQuantizer& q);

/// Two quantizations of the same block with independent noise (forward and
/// backward lanes); stream.lane is ignored.
std::pair<PackedBlock, PackedBlock> double_sample(const Matrix& block, int bits,
                                                  std::uint64_t seed, rng::StreamId stream);

// Layout: u32 b, u64 m, u64 s, then ceil(b*m*s/64) little-endian u64 words.
void write_packed(const PackedBlock& packed, std::ostream& out);
PackedBlock read_packed(std::istream& in);

}  // namespace lprff::quantize
