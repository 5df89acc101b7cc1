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

#include <filesystem>
#include <vector>

namespace lprff::data {

enum class Task { kRegression, kClassification };

/// Rows of `x` are examples. For classification, `labels` holds class indices
/// in [0, num_classes) stored as doubles.
struct Dataset {
  Matrix x;
  Vector labels;
  Task task = Task::kRegression;
  int num_classes = 0;

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  /// Throws std::invalid_argument if the label vector does not match.
  void validate() const;
};

struct NormStats {
  Vector mean;
  Vector stddev;
  std::vector<bool> binary;
  double label_mean = 0.0;
};

struct Normalized {
  Dataset train;
  std::vector<Dataset> others;
  NormStats stats;
};

/// Reads LIBSVM sparse text (`label idx:val ...`, 1-based increasing indices).
/// Labels are kept as raw reals; see to_classification.
Dataset load_libsvm(const std::filesystem::path& path);

/// Header-less CSV, label in the first column.
Dataset load_csv(const std::filesystem::path& path);

/// Remaps distinct raw label values (sorted ascending) to 0..c-1.
Dataset to_classification(const Dataset& ds);

/// Pads `ds` with zero columns up to `d` (LIBSVM files may omit trailing
/// features). Throws if ds already has more than d columns.
Dataset with_dim(const Dataset& ds, Index d);

/// Standardizes continuous columns and centers regression labels using
/// statistics of `train` only; binary {0,1} columns pass through untouched.
Normalized normalize(const Dataset& train, const std::vector<Dataset>& others);

Dataset apply_normalization(const Dataset& ds, const NormStats& stats);

/// Deterministic partition; returns (rest, heldout) with
/// |heldout| = round(fraction * n), rounding half away from zero.
std::pair<Dataset, Dataset> split_heldout(const Dataset& ds, double fraction,
                                          std::uint64_t seed);

/// Rows of `ds` selected by `rows`, in order.
Dataset subset(const Dataset& ds, const std::vector<Index>& rows);

/// Uniform subsample without replacement of at most `cap` rows.
Dataset subsample(const Dataset& ds, Index cap, std::uint64_t seed);

}  // namespace lprff::data
