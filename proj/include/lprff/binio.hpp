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

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

// Little-endian scalar and matrix I/O for the on-disk blobs.
namespace lprff::binio {

static_assert(std::endian::native == std::endian::little,
              "blob I/O assumes a little-endian host");

template <typename T>
void write(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError("truncated binary blob", 0);
  }
  return value;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) write<double>(out, m(i, j));
}

inline Matrix read_matrix(std::istream& in) {
  const auto rows = read<std::uint64_t>(in);
  const auto cols = read<std::uint64_t>(in);
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw ParseError("implausible matrix shape", 0);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = read<double>(in);
  return m;
}

inline void write_vector(std::ostream& out, const Vector& v) { write_matrix(out, v); }

inline Vector read_vector(std::istream& in) {
  Matrix m = read_matrix(in);
  if (m.cols() != 1 && m.rows() != 0) throw ParseError("expected a column vector", 0);
  return m.col(0);
}

}  // namespace lprff::binio
