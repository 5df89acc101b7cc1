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

#include "lprff/features.hpp"

#include "lprff/binio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace lprff::features {

namespace {

constexpr std::uint32_t kBlobMagic = 0x4d46504c;  // "LPFM"
constexpr std::uint32_t kBlobVersion = 1;

enum class Tag : std::uint32_t { kRff = 1, kCirculant = 2, kNystrom = 3 };

void require_dims(Index expected, const Matrix& xb) {
  if (xb.cols() != expected) {
    throw std::invalid_argument("feature map expects " + std::to_string(expected) +
                                " input columns, got " + std::to_string(xb.cols()));
  }
}

// sqrt(2/m) cos(P + a) where P holds the projections, s x m.
Matrix cosine_features(Matrix projections, const Vector& phases) {
  const double scale = std::sqrt(2.0 / static_cast<double>(projections.cols()));
  projections.rowwise() += phases.transpose();
  return scale * projections.array().cos().matrix();
}

}  // namespace

RffMap sample_rff(const kernel::GaussianKernel& k, Index m, Index d, std::uint64_t seed,
                  Parametrization parametrization) {
  if (m < 1 || d < 1) throw std::invalid_argument("sample_rff: m and d must be positive");
  if (parametrization == Parametrization::kSinCos && m % 2 != 0) {
    throw std::invalid_argument("sample_rff: sin/cos parametrization needs even m");
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * k.gamma()));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  RffMap map;
  map.gamma = k.gamma();
  map.seed = seed;
  map.parametrization = parametrization;
  map.w = Matrix(m, d);
  map.phases = Vector::Zero(m);
  if (parametrization == Parametrization::kCos) {
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < d; ++j) map.w(i, j) = normal(gen);
    for (Index i = 0; i < m; ++i) map.phases[i] = phase(gen);
  } else {
    for (Index i = 0; i < m; i += 2) {
      for (Index j = 0; j < d; ++j) map.w(i, j) = normal(gen);
      map.w.row(i + 1) = map.w.row(i);
    }
  }
  return map;
}

CirculantRffMap sample_circulant_rff(const kernel::GaussianKernel& k, Index m, Index d,
                                     std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("sample_circulant_rff: m and d must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * k.gamma()));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::bernoulli_distribution coin(0.5);

  CirculantRffMap map;
  map.gamma = k.gamma();
  map.seed = seed;
  map.m = m;
  const Index blocks = (m + d - 1) / d;
  map.bases = Matrix(blocks, d);
  for (Index b = 0; b < blocks; ++b)
    for (Index j = 0; j < d; ++j) map.bases(b, j) = normal(gen);
  map.signs = Vector(m);
  for (Index i = 0; i < m; ++i) map.signs[i] = coin(gen) ? 1.0 : -1.0;
  map.phases = Vector(m);
  for (Index i = 0; i < m; ++i) map.phases[i] = phase(gen);
  return map;
}

Matrix CirculantRffMap::effective_w() const {
  const Index d = input_dim();
  Matrix w(m, d);
  for (Index i = 0; i < m; ++i) {
    const Index block = i / d;
    const Index shift = i % d;
    for (Index j = 0; j < d; ++j) w(i, j) = signs[i] * bases(block, (j - shift + d) % d);
  }
  return w;
}

NystromMap sample_nystrom(const Matrix& train, const kernel::GaussianKernel& k, Index m,
                          std::uint64_t seed, std::optional<double> eig_threshold) {
  const Index n = train.rows();
  if (m < 1) throw std::invalid_argument("sample_nystrom: m must be positive");
  if (m > n) {
    throw std::invalid_argument("sample_nystrom: m=" + std::to_string(m) +
                                " exceeds the " + std::to_string(n) + " training rows");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  // Partial Fisher-Yates: the first m entries are a uniform m-subset.
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(gen))]);
  }
  NystromMap map;
  map.gamma = k.gamma();
  map.seed = seed;
  map.landmarks = Matrix(m, train.cols());
  for (Index i = 0; i < m; ++i) map.landmarks.row(i) = train.row(order[static_cast<std::size_t>(i)]);

  const auto eig = kernel::sym_eig(kernel::gram(k, map.landmarks));
  map.eig_threshold = eig_threshold.value_or(1e-12 * std::max(eig.values[0], 0.0));
  Index rank = 0;
  while (rank < m && eig.values[rank] > map.eig_threshold) ++rank;
  map.basis = eig.vectors.leftCols(rank);
  map.eigenvalues = eig.values.head(rank);
  return map;
}

Matrix apply(const RffMap& map, const Matrix& xb) {
  require_dims(map.input_dim(), xb);
  Matrix projections = xb * map.w.transpose();
  if (map.parametrization == Parametrization::kCos) return cosine_features(std::move(projections), map.phases);
  const double scale = std::sqrt(2.0 / static_cast<double>(map.features()));
  Matrix z(xb.rows(), map.features());
  for (Index i = 0; i < map.features(); i += 2) {
    z.col(i) = scale * projections.col(i).array().cos().matrix();
    z.col(i + 1) = scale * projections.col(i + 1).array().sin().matrix();
  }
  return z;
}

Matrix apply(const CirculantRffMap& map, const Matrix& xb) {
  const Index d = map.input_dim();
  require_dims(d, xb);
  Matrix projections(xb.rows(), map.m);
  Matrix block(d, d);
  for (Index b = 0; b < map.blocks(); ++b) {
    const Index first = b * d;
    const Index rows = std::min(d, map.m - first);
    for (Index r = 0; r < rows; ++r) {
      for (Index j = 0; j < d; ++j) block(r, j) = map.bases(b, (j - r + d) % d);
    }
    projections.middleCols(first, rows).noalias() = xb * block.topRows(rows).transpose();
  }
  projections.array().rowwise() *= map.signs.transpose().array();
  return cosine_features(std::move(projections), map.phases);
}

Matrix apply(const NystromMap& map, const Matrix& xb) {
  require_dims(map.input_dim(), xb);
  const kernel::GaussianKernel k(map.gamma);
  const Vector inv_sqrt = map.eigenvalues.array().rsqrt();
  return kernel::gram(k, xb, map.landmarks) * map.basis * inv_sqrt.asDiagonal();
}

Matrix apply(const FeatureMap& map, const Matrix& xb) {
  return std::visit([&](const auto& m) { return apply(m, xb); }, map);
}

Index output_dim(const FeatureMap& map) {
  return std::visit([](const auto& m) { return m.features(); }, map);
}

Index input_dim(const FeatureMap& map) {
  return std::visit([](const auto& m) { return m.input_dim(); }, map);
}

bool is_fourier(const FeatureMap& map) { return !std::holds_alternative<NystromMap>(map); }

void save(const FeatureMap& map, std::ostream& out) {
  using binio::write;
  write<std::uint32_t>(out, kBlobMagic);
  write<std::uint32_t>(out, kBlobVersion);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        Tag tag = std::is_same_v<T, RffMap> ? Tag::kRff
                  : std::is_same_v<T, CirculantRffMap> ? Tag::kCirculant
                                                       : Tag::kNystrom;
        write<std::uint32_t>(out, static_cast<std::uint32_t>(tag));
        write<std::uint64_t>(out, static_cast<std::uint64_t>(m.features()));
        write<std::uint64_t>(out, static_cast<std::uint64_t>(m.input_dim()));
        write<std::uint64_t>(out, m.seed);
        write<double>(out, m.gamma);
        if constexpr (std::is_same_v<T, RffMap>) {
          write<std::uint32_t>(out, static_cast<std::uint32_t>(m.parametrization));
          binio::write_matrix(out, m.w);
          binio::write_vector(out, m.phases);
        } else if constexpr (std::is_same_v<T, CirculantRffMap>) {
          binio::write_matrix(out, m.bases);
          binio::write_vector(out, m.signs);
          binio::write_vector(out, m.phases);
        } else {
          write<double>(out, m.eig_threshold);
          binio::write_matrix(out, m.landmarks);
          binio::write_matrix(out, m.basis);
          binio::write_vector(out, m.eigenvalues);
        }
      },
      map);
  if (!out) throw std::runtime_error("failed to write feature map blob");
}

FeatureMap load(std::istream& in) {
  using binio::read;
  if (read<std::uint32_t>(in) != kBlobMagic) throw ParseError("not a feature map blob", 0);
  const auto version = read<std::uint32_t>(in);
  if (version != kBlobVersion) {
    throw ParseError("unsupported feature map blob version " + std::to_string(version), 0);
  }
  const auto tag = static_cast<Tag>(read<std::uint32_t>(in));
  const auto m = static_cast<Index>(read<std::uint64_t>(in));
  const auto d = static_cast<Index>(read<std::uint64_t>(in));
  const auto seed = read<std::uint64_t>(in);
  const auto gamma = read<double>(in);
  auto check = [&](Index features, Index input) {
    if (features != m || input != d) throw ParseError("feature map blob header/payload mismatch", 0);
  };
  switch (tag) {
    case Tag::kRff: {
      RffMap map;
      map.gamma = gamma;
      map.seed = seed;
      map.parametrization = static_cast<Parametrization>(read<std::uint32_t>(in));
      map.w = binio::read_matrix(in);
      map.phases = binio::read_vector(in);
      check(map.features(), map.input_dim());
      return map;
    }
    case Tag::kCirculant: {
      CirculantRffMap map;
      map.gamma = gamma;
      map.seed = seed;
      map.m = m;
      map.bases = binio::read_matrix(in);
      map.signs = binio::read_vector(in);
      map.phases = binio::read_vector(in);
      check(map.signs.size(), map.input_dim());
      return map;
    }
    case Tag::kNystrom: {
      NystromMap map;
      map.gamma = gamma;
      map.seed = seed;
      map.eig_threshold = read<double>(in);
      map.landmarks = binio::read_matrix(in);
      map.basis = binio::read_matrix(in);
      map.eigenvalues = binio::read_vector(in);
      check(map.features(), map.input_dim());
      return map;
    }
  }
  throw ParseError("unknown feature map type tag", 0);
}

}  // namespace lprff::features
