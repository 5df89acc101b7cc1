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

#include "lprff/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace lprff::data {

namespace {

double parse_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("invalid number '" + std::string(token) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  return in;
}

}  // namespace

void Dataset::validate() const {
  if (labels.size() != x.rows()) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                " != example count " + std::to_string(x.rows()));
  }
  if (task == Task::kClassification) {
    if (num_classes < 1) throw std::invalid_argument("classification needs num_classes >= 1");
    for (Index i = 0; i < labels.size(); ++i) {
      double l = labels[i];
      if (l < 0 || l >= num_classes || l != std::floor(l)) {
        throw std::invalid_argument("class label out of range at row " + std::to_string(i));
      }
    }
  }
}

Dataset load_libsvm(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<double> labels;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index max_index = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (end > pos) tokens.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    labels.push_back(parse_double(tokens.front(), line_no));
    std::vector<std::pair<Index, double>> entries;
    Index previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected idx:val, got '" + std::string(tokens[t]) + "'", line_no);
      }
      auto idx_text = tokens[t].substr(0, colon);
      long long idx = 0;
      auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx < 1) {
        throw ParseError("invalid feature index '" + std::string(idx_text) + "'", line_no);
      }
      if (idx <= previous) {
        throw ParseError("feature indices must be strictly increasing", line_no);
      }
      previous = idx;
      entries.emplace_back(static_cast<Index>(idx), parse_double(tokens[t].substr(colon + 1), line_no));
    }
    max_index = std::max(max_index, previous);
    rows.push_back(std::move(entries));
  }
  Dataset ds;
  ds.x = Matrix::Zero(static_cast<Index>(rows.size()), max_index);
  ds.labels = Vector(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.labels[static_cast<Index>(i)] = labels[i];
    for (auto [idx, val] : rows[i]) ds.x(static_cast<Index>(i), idx - 1) = val;
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> values;
    for (auto field : split(line, ',')) values.push_back(parse_double(trim(field), line_no));
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, got " +
                           std::to_string(values.size()), line_no);
    }
    rows.push_back(std::move(values));
  }
  Dataset ds;
  const Index d = width == 0 ? 0 : static_cast<Index>(width) - 1;
  ds.x = Matrix(static_cast<Index>(rows.size()), d);
  ds.labels = Vector(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Index>(i);
    ds.labels[r] = rows[i][0];
    for (Index j = 0; j < d; ++j) ds.x(r, j) = rows[i][static_cast<std::size_t>(j) + 1];
  }
  return ds;
}

Dataset to_classification(const Dataset& ds) {
  std::map<double, int> classes;
  for (Index i = 0; i < ds.labels.size(); ++i) classes.emplace(ds.labels[i], 0);
  int next = 0;
  for (auto& [value, id] : classes) id = next++;
  Dataset out = ds;
  out.task = Task::kClassification;
  out.num_classes = next;
  for (Index i = 0; i < ds.labels.size(); ++i) out.labels[i] = classes.at(ds.labels[i]);
  return out;
}

Dataset with_dim(const Dataset& ds, Index d) {
  if (ds.dim() > d) {
    throw std::invalid_argument("dataset has " + std::to_string(ds.dim()) +
                                " features, more than " + std::to_string(d));
  }
  Dataset out = ds;
  out.x = Matrix::Zero(ds.size(), d);
  out.x.leftCols(ds.dim()) = ds.x;
  return out;
}

Normalized normalize(const Dataset& train, const std::vector<Dataset>& others) {
  const Index d = train.dim();
  for (const auto& other : others) {
    if (other.dim() != d) throw std::invalid_argument("datasets must share feature dimension");
  }
  NormStats stats;
  stats.mean = Vector::Zero(d);
  stats.stddev = Vector::Ones(d);
  stats.binary.assign(static_cast<std::size_t>(d), false);
  const Index n = train.size();
  for (Index j = 0; j < d; ++j) {
    auto col = train.x.col(j);
    bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
    stats.binary[static_cast<std::size_t>(j)] = binary;
    if (binary || n == 0) continue;
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    stats.mean[j] = mean;
    stats.stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  if (train.task == Task::kRegression && n > 0) stats.label_mean = train.labels.mean();

  Normalized out;
  out.train = apply_normalization(train, stats);
  for (const auto& other : others) out.others.push_back(apply_normalization(other, stats));
  out.stats = std::move(stats);
  return out;
}

Dataset apply_normalization(const Dataset& ds, const NormStats& stats) {
  if (ds.dim() != stats.mean.size()) throw std::invalid_argument("normalization dimension mismatch");
  Dataset out = ds;
  out.x = (ds.x.rowwise() - stats.mean.transpose()).array().rowwise() /
          stats.stddev.transpose().array();
  if (ds.task == Task::kRegression) out.labels.array() -= stats.label_mean;
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.task = ds.task;
  out.num_classes = ds.num_classes;
  out.x = Matrix(static_cast<Index>(rows.size()), ds.dim());
  out.labels = Vector(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Index>(i)) = ds.x.row(rows[i]);
    out.labels[static_cast<Index>(i)] = ds.labels[rows[i]];
  }
  return out;
}

std::pair<Dataset, Dataset> split_heldout(const Dataset& ds, double fraction,
                                          std::uint64_t seed) {
  const Index n = ds.size();
  if (n < 2) throw std::invalid_argument("split_heldout needs at least 2 examples");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("heldout fraction must lie in (0, 1)");
  }
  const auto heldout = static_cast<Index>(std::round(fraction * static_cast<double>(n)));
  if (heldout == 0 || heldout == n) {
    throw std::invalid_argument("heldout fraction " + std::to_string(fraction) +
                                " leaves an empty part for n=" + std::to_string(n));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<Index> held(order.begin(), order.begin() + heldout);
  std::vector<Index> rest(order.begin() + heldout, order.end());
  std::sort(held.begin(), held.end());
  std::sort(rest.begin(), rest.end());
  return {subset(ds, rest), subset(ds, held)};
}

Dataset subsample(const Dataset& ds, Index cap, std::uint64_t seed) {
  if (ds.size() <= cap) return ds;
  std::vector<Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  order.resize(static_cast<std::size_t>(cap));
  std::sort(order.begin(), order.end());
  return subset(ds, order);
}

}  // namespace lprff::data
