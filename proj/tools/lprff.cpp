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

#include "lprff/config.hpp"
#include "lprff/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace lprff;

  CLI::App app{"Kernel approximation experiments with low-precision random Fourier features"};
  app.set_version_flag("--version", experiment::version());
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value experiment config");
    sub->add_option("--override,-o", overrides, "key=value, applied after the config file")
        ->take_all();
  };
  auto* train = app.add_subcommand("train", "train linear models over the configured grid");
  auto* metrics = app.add_subcommand("metrics", "kernel approximation error and (delta1, delta2)");
  auto* theory = app.add_subcommand("theory", "risk, bound and rank-correlation analysis");
  auto* memory = app.add_subcommand("memory", "training memory footprints");
  auto* sweep = app.add_subcommand("sweep", "train, metrics and theory in sequence");
  for (auto* sub : {train, metrics, theory, memory, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    config::KeyValueConfig kv;
    if (!config_path.empty()) kv = config::KeyValueConfig::load(config_path);
    for (const auto& o : overrides) kv.apply_override(o);
    const auto cfg = experiment::ExperimentConfig::from(kv);

    if (*train) return experiment::run_train(cfg, std::cerr);
    if (*metrics) return experiment::run_metrics(cfg, std::cerr);
    if (*theory) return experiment::run_theory(cfg, std::cerr);
    if (*memory) return experiment::run_memory(cfg, std::cout);
    return experiment::run_sweep(cfg, std::cerr);
  } catch (const config::ConfigError& e) {
    std::cerr << "lprff: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "lprff: " << e.what() << "\n";
    return kExitRuntime;
  }
}
