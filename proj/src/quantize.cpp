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

#include "lprff/quantize.hpp"

#include "lprff/binio.hpp"

#include <algorithm>
#include <cmath>

namespace lprff::quantize {

namespace {

constexpr double kClampSlack = 1e-12;

// Rounds position t in [0, max_code] (grid units) to floor(t) or floor(t)+1
// with probability equal to the fractional part.
std::uint32_t stochastic_round(double t, std::uint32_t max_code, double u) noexcept {
  if (t <= 0.0) return 0;
  if (t >= max_code) return max_code;
  const double base = std::floor(t);
  auto code = static_cast<std::uint32_t>(base);
  if (u < t - base) ++code;
  return code;
}

void require_bits(int bits) {
  if (!supported_bits(bits)) {
    throw std::invalid_argument("unsupported precision b=" + std::to_string(bits) +
                                " (expected 1, 2, 4, 8 or 16)");
  }
}

}  // namespace

bool supported_bits(int bits) noexcept {
  return bits == 1 || bits == 2 || bits == 4 || bits == 8 || bits == 16;
}

double delta_b_sq(int bits) {
  if (bits < 1 || bits > 62) throw std::invalid_argument("delta_b_sq: b must lie in [1, 62]");
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return 2.0 / (levels * levels);
}

Quantizer::Quantizer(int bits, Index features) : bits_(bits), features_(features) {
  require_bits(bits);
  if (features < 1) throw std::invalid_argument("Quantizer: feature count must be positive");
  hi_ = std::sqrt(2.0 / static_cast<double>(features));
  lo_ = -hi_;
  max_code_ = static_cast<std::uint32_t>((1ULL << bits) - 1);
  step_ = (hi_ - lo_) / max_code_;
}

PackedBlock::PackedBlock(int bits, Index features, Index rows)
    : bits_(bits), features_(features), rows_(rows) {
  require_bits(bits);
  if (features < 0 || rows < 0) throw std::invalid_argument("PackedBlock: negative shape");
  words_.assign(static_cast<std::size_t>((payload_bits() + 63) / 64), 0);
}

PackedBlock PackedBlock::from_words(int bits, Index features, Index rows,
                                    std::vector<std::uint64_t> words) {
  PackedBlock packed(bits, features, rows);
  if (words.size() != packed.words_.size()) {
    throw std::invalid_argument("PackedBlock: expected " + std::to_string(packed.words_.size()) +
                                " words, got " + std::to_string(words.size()));
  }
  packed.words_ = std::move(words);
  return packed;
}

std::uint64_t PackedBlock::payload_bits() const noexcept {
  return static_cast<std::uint64_t>(bits_) * static_cast<std::uint64_t>(features_) *
         static_cast<std::uint64_t>(rows_);
}

std::uint32_t PackedBlock::code(Index row, Index col) const noexcept {
  const auto bit = static_cast<std::uint64_t>(row * features_ + col) * static_cast<std::uint64_t>(bits_);
  const std::uint64_t mask = (1ULL << bits_) - 1;
  return static_cast<std::uint32_t>((words_[bit / 64] >> (bit % 64)) & mask);
}

void PackedBlock::set_code(Index row, Index col, std::uint32_t code) noexcept {
  const auto bit = static_cast<std::uint64_t>(row * features_ + col) * static_cast<std::uint64_t>(bits_);
  const std::uint64_t mask = (1ULL << bits_) - 1;
  auto& word = words_[bit / 64];
  word = (word & ~(mask << (bit % 64))) | ((static_cast<std::uint64_t>(code) & mask) << (bit % 64));
}

NystromQuantizer NystromQuantizer::fit(const Matrix& train_features, int bits) {
  require_bits(bits);
  if (train_features.rows() == 0) throw std::invalid_argument("NystromQuantizer: no training rows");
  NystromQuantizer q;
  q.bits = bits;
  q.lo = train_features.colwise().minCoeff().transpose();
  q.hi = train_features.colwise().maxCoeff().transpose();
  return q;
}

double NystromQuantizer::step(Index feature) const {
  return (hi[feature] - lo[feature]) / static_cast<double>((1ULL << bits) - 1);
}

PackedBlock quantize_stochastic(const Matrix& block, int bits, std::uint64_t seed,
                                rng::StreamId stream) {
  const Quantizer q(bits, block.cols());
  PackedBlock packed(bits, block.cols(), block.rows());
  const rng::CounterStream noise(seed, stream);
  const double inv_step = 1.0 / q.step();
  for (Index i = 0; i < block.rows(); ++i) {
    for (Index j = 0; j < block.cols(); ++j) {
      const double z = block(i, j);
      if (!(z >= q.lo() - kClampSlack && z <= q.hi() + kClampSlack)) {
        throw RangeError("feature value " + std::to_string(z) + " at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") lies outside [-sqrt(2/m), sqrt(2/m)]");
      }
      const auto entry = static_cast<std::uint64_t>(i * block.cols() + j);
      packed.set_code(i, j, stochastic_round((z - q.lo()) * inv_step, q.max_code(), noise.uniform(entry)));
    }
  }
  return packed;
}

Matrix dequantize(const PackedBlock& packed) {
  const Quantizer q(packed.bits(), packed.features());
  Matrix out(packed.rows(), packed.features());
  for (Index i = 0; i < packed.rows(); ++i)
    for (Index j = 0; j < packed.features(); ++j) out(i, j) = q.value(packed.code(i, j));
  return out;
}

PackedBlock quantize_nystrom(const Matrix& block, const NystromQuantizer& q, std::uint64_t seed,
                             rng::StreamId stream) {
  if (block.cols() != q.lo.size() || q.hi.size() != q.lo.size()) {
    throw std::invalid_argument("quantize_nystrom: quantizer/feature dimension mismatch");
  }
  PackedBlock packed(q.bits, block.cols(), block.rows());
  const rng::CounterStream noise(seed, stream);
  const auto max_code = static_cast<std::uint32_t>((1ULL << q.bits) - 1);
  for (Index j = 0; j < block.cols(); ++j) {
    const double width = q.hi[j] - q.lo[j];
    if (!(width > 0.0)) continue;  // constant feature, code 0
    const double inv_step = max_code / width;
    for (Index i = 0; i < block.rows(); ++i) {
      const double z = std::clamp(block(i, j), q.lo[j], q.hi[j]);
      const auto entry = static_cast<std::uint64_t>(i * block.cols() + j);
      packed.set_code(i, j, stochastic_round((z - q.lo[j]) * inv_step, max_code, noise.uniform(entry)));
    }
  }
  return packed;
}

Matrix dequantize(const PackedBlock& packed, const NystromQuantizer& q) {
  if (packed.features() != q.lo.size() || packed.bits() != q.bits) {
    throw std::invalid_argument("dequantize: quantizer does not match packed block");
  }
  Matrix out(packed.rows(), packed.features());
  for (Index j = 0; j < packed.features(); ++j) {
    const double step = q.step(j);
    for (Index i = 0; i < packed.rows(); ++i) out(i, j) = q.lo[j] + packed.code(i, j) * step;
  }
  return out;
}

std::pair<PackedBlock, PackedBlock> double_sample(const Matrix& block, int bits,
                                                  std::uint64_t seed, rng::StreamId stream) {
  rng::StreamId fwd = stream;
  fwd.lane = rng::kForward;
  rng::StreamId bwd = stream;
  bwd.lane = rng::kBackward;
  return {quantize_stochastic(block, bits, seed, fwd), quantize_stochastic(block, bits, seed, bwd)};
}

void write_packed(const PackedBlock& packed, std::ostream& out) {
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(packed.bits()));
  binio::write<std::uint64_t>(out, static_cast<std::uint64_t>(packed.features()));
  binio::write<std::uint64_t>(out, static_cast<std::uint64_t>(packed.rows()));
  for (auto word : packed.words()) binio::write<std::uint64_t>(out, word);
  if (!out) throw std::runtime_error("failed to write packed block");
}

PackedBlock read_packed(std::istream& in) {
  const auto bits = static_cast<int>(binio::read<std::uint32_t>(in));
  const auto features = binio::read<std::uint64_t>(in);
  const auto rows = binio::read<std::uint64_t>(in);
  if (!supported_bits(bits)) throw ParseError("packed block has unsupported precision", 0);
  if (features > (1ULL << 40) || rows > (1ULL << 40)) throw ParseError("implausible packed block shape", 0);
  std::vector<std::uint64_t> words(static_cast<std::size_t>((bits * features * rows + 63) / 64));
  for (auto& word : words) word = binio::read<std::uint64_t>(in);
  return PackedBlock::from_words(bits, static_cast<Index>(features), static_cast<Index>(rows),
                                 std::move(words));
}

}  // namespace lprff::quantize
