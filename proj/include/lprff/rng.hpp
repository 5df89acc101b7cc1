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

namespace lprff::rng {

// Counter-based generator: every draw is a pure function of its key and
// counter, so quantization noise for (seed, epoch, batch, entry, lane) can be
// regenerated in any order.

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t value) noexcept {
  return mix64(key ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/// Identifies one quantization noise stream.
struct StreamId {
  std::uint64_t epoch = 0;
  std::uint64_t batch = 0;
  std::uint64_t lane = 0;
};

enum Lane : std::uint64_t { kForward = 0, kBackward = 1 };

class CounterStream {
 public:
  CounterStream(std::uint64_t seed, StreamId id) noexcept
      : key_(combine(combine(combine(mix64(seed), id.epoch), id.batch), id.lane)) {}

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(mix64(key_ ^ mix64(counter)) >> 11) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Derives an independent seed for a named purpose.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) noexcept {
  return combine(mix64(seed), salt);
}

}  // namespace lprff::rng
