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

#include "lprff/config.hpp"
#include "lprff/data.hpp"
#include "lprff/features.hpp"
#include "lprff/memory.hpp"
#include "lprff/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lprff::experiment {

/// Version string stamped into every results row.
std::string version();

struct ExperimentConfig {
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> heldout_path;  // split from train when absent
  std::string format = "auto";                        // libsvm | csv | auto (by extension)
  data::Task task = data::Task::kRegression;
  double gamma = 1.0;
  std::vector<memory::Method> methods;
  std::vector<Index> m_grid;
  std::vector<int> b_grid{8};
  std::vector<double> lambda_grid;
  std::vector<double> lambda_percentiles;
  std::vector<double> lr_grid{0.5};
  std::vector<std::uint64_t> seeds{1};
  Index batch_size = 250;
  Index heldout_cap = 20000;
  double heldout_fraction = 0.1;
  std::uint64_t split_seed = 0;
  int max_decays = 10;
  int max_epochs = 1000;
  bool double_sampling = false;
  double sigma_sq = 1.0;
  double rho_fail = 0.1;
  double thm2_delta1 = 0.5;
  double thm2_delta2 = 1.0;
  Index theory_max_n = 2048;
  std::vector<std::pair<std::string, std::string>> spearman_pairs;
  bool strict_memory = false;
  // memory subcommand only: input dimension and output count
  std::optional<Index> input_dim;
  Index outputs = 1;
  std::filesystem::path output_dir = "results";
  std::string hash;

  /// Validates and converts; throws config::ConfigError naming the bad key.
  static ExperimentConfig from(const config::KeyValueConfig& kv);
};

/// One (method, m, b, seed) cell.
struct Cell {
  memory::Method method = memory::Method::kRff;
  Index m = 0;
  std::optional<int> bits;  // lp_rff only
  std::uint64_t seed = 0;

  std::string id() const;
};

/// Cartesian product in config order; b varies only for lp_rff.
std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg);

/// Train/heldout pair after loading, splitting and normalization.
struct PreparedData {
  data::Dataset train;
  data::Dataset heldout;
};

/// Throws config::ConfigError for missing or unreadable files.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Samples the projection for a cell (lp_rff uses a circulant projection).
features::FeatureMap make_map(const Cell& cell, double gamma, const data::Dataset& train);

/// Lambda values for a sweep: explicit values, then eigenvalue percentiles of
/// `eigs_desc` (0 = largest). Returns (label, value) pairs.
std::vector<std::pair<std::string, double>> lambda_sweep(const ExperimentConfig& cfg,
                                                         const Vector& eigs_desc);

// Each returns a process exit code and writes under cfg.output_dir.
int run_train(const ExperimentConfig& cfg, std::ostream& log);
int run_metrics(const ExperimentConfig& cfg, std::ostream& log);
int run_theory(const ExperimentConfig& cfg, std::ostream& log);
int run_memory(const ExperimentConfig& cfg, std::ostream& out);
int run_sweep(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace lprff::experiment
