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

#include "lprff/experiment.hpp"

#include "lprff/kernel.hpp"
#include "lprff/metrics.hpp"
#include "lprff/quantize.hpp"
#include "lprff/rng.hpp"
#include "lprff/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#ifndef LPRFF_VERSION
#define LPRFF_VERSION "unknown"
#endif

namespace lprff::experiment {

namespace fs = std::filesystem;
using config::ConfigError;

namespace {

constexpr std::uint64_t kMapSalt = 0x6d6170;
constexpr std::uint64_t kQuantSalt = 0x71756e74;
constexpr std::uint64_t kSubsampleSalt = 0x73756273;

const std::set<std::string> kKnownKeys = {
    "train_path", "heldout_path", "format", "task", "gamma", "methods", "m_grid", "b_grid",
    "lambda_grid", "lambda_percentiles", "lr_grid", "seeds", "batch_size", "heldout_cap",
    "heldout_fraction", "split_seed", "max_decays", "max_epochs", "double_sampling", "sigma_sq",
    "rho_fail", "thm2_delta1", "thm2_delta2", "theory_max_n", "spearman_pairs", "strict_memory",
    "d", "c", "output_dir"};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : config::split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

/// Writes a header once and flushes each completed row.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) line += ',';
      line += fields[i];
    }
    line += '\n';
    out_ << line << std::flush;
  }

 private:
  std::ofstream out_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory '" + dir.string() + "': " + ec.message());
}

data::Dataset load_any(const fs::path& path, const std::string& format) {
  if (!fs::exists(path)) throw ConfigError("dataset not found: '" + path.string() + "'");
  std::string fmt = format;
  if (fmt == "auto") fmt = path.extension() == ".csv" ? "csv" : "libsvm";
  try {
    return fmt == "csv" ? data::load_csv(path) : data::load_libsvm(path);
  } catch (const ParseError& e) {
    throw ConfigError("cannot parse dataset '" + path.string() + "': " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

// Fourier-type features lie in [-sqrt(2/m), sqrt(2/m)]; lp_rff cells are
// quantized once with a fixed stream for kernel-matrix measurements.
Matrix cell_features(const Cell& cell, const features::FeatureMap& map, const Matrix& x,
                     std::uint64_t stream_batch) {
  Matrix z = features::apply(map, x);
  if (cell.bits) {
    const auto packed = quantize::quantize_stochastic(z, *cell.bits, rng::derive(cell.seed, kQuantSalt),
                                                      {0, stream_batch, rng::kForward});
    z = quantize::dequantize(packed);
  }
  return z;
}

Index approx_rank(const Cell& cell, const features::FeatureMap& map, Index n) {
  if (std::holds_alternative<features::NystromMap>(map)) return features::output_dim(map);
  return std::min<Index>(cell.m, n);
}

Index footprint_outputs(const data::Dataset& ds) {
  if (ds.task == data::Task::kRegression || ds.num_classes <= 2) return 1;
  return ds.num_classes;
}

std::string bits_field(const Cell& cell) { return cell.bits ? std::to_string(*cell.bits) : ""; }

double tune_learning_rate(const ExperimentConfig& cfg, const PreparedData& prepared,
                          std::ostream& log) {
  if (cfg.lr_grid.size() == 1) return cfg.lr_grid.front();
  // Largest Nystrom configuration if present, else the first method's largest.
  Cell probe;
  probe.method = std::find(cfg.methods.begin(), cfg.methods.end(), memory::Method::kNystrom) !=
                         cfg.methods.end()
                     ? memory::Method::kNystrom
                     : cfg.methods.front();
  probe.m = *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end());
  if (probe.method == memory::Method::kNystrom) probe.m = std::min(probe.m, prepared.train.size());
  if (probe.method == memory::Method::kLpRff) probe.bits = cfg.b_grid.front();
  probe.seed = cfg.seeds.front();
  const auto map = make_map(probe, cfg.gamma, prepared.train);
  CsvWriter out(cfg.output_dir / "lr_tuning.csv", {"lr", "heldout_loss", "heldout_metric", "status"});
  double best_lr = cfg.lr_grid.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (double lr : cfg.lr_grid) {
    trainer::TrainConfig tc;
    tc.initial_lr = lr;
    tc.batch_size = cfg.batch_size;
    tc.max_decays = cfg.max_decays;
    tc.max_epochs = cfg.max_epochs;
    tc.loss = trainer::default_loss(prepared.train);
    if (probe.bits) tc.quantization = trainer::QuantizationConfig{*probe.bits, cfg.double_sampling};
    try {
      const auto result = trainer::train_sgd(map, prepared.train, prepared.heldout, tc, probe.seed);
      out.row({num(lr), num(result.log.best_loss), num(result.log.best_metric), "ok"});
      if (result.log.best_loss < best_loss) {
        best_loss = result.log.best_loss;
        best_lr = lr;
      }
    } catch (const NumericalError& e) {
      out.row({num(lr), "", "", "diverged"});
    }
  }
  log << "tuned learning rate: " << best_lr << " (" << probe.id() << ")\n";
  return best_lr;
}

}  // namespace

std::string version() { return LPRFF_VERSION; }

ExperimentConfig ExperimentConfig::from(const config::KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ExperimentConfig cfg;
  auto get = [&](const std::string& key) { return kv.get(key); };
  if (auto v = get("train_path")) cfg.train_path = *v;
  if (auto v = get("heldout_path"); v && !v->empty()) cfg.heldout_path = fs::path(*v);
  if (auto v = get("format")) {
    if (*v != "libsvm" && *v != "csv" && *v != "auto") throw ConfigError("format must be libsvm, csv or auto");
    cfg.format = *v;
  }
  if (auto v = get("task")) {
    if (*v == "regression") cfg.task = data::Task::kRegression;
    else if (*v == "classification") cfg.task = data::Task::kClassification;
    else throw ConfigError("task must be regression or classification");
  }
  if (auto v = get("gamma")) cfg.gamma = parse_number<double>("gamma", *v);
  if (!(cfg.gamma > 0.0 && std::isfinite(cfg.gamma))) throw ConfigError("gamma must be positive");
  if (auto v = get("methods")) {
    for (const auto& name : config::split_list(*v)) {
      try {
        cfg.methods.push_back(memory::parse_method(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("methods: ") + e.what());
      }
    }
  }
  if (auto v = get("m_grid")) cfg.m_grid = parse_list<Index>("m_grid", *v);
  if (auto v = get("b_grid")) cfg.b_grid = parse_list<int>("b_grid", *v);
  if (auto v = get("lambda_grid")) cfg.lambda_grid = parse_list<double>("lambda_grid", *v);
  if (auto v = get("lambda_percentiles")) cfg.lambda_percentiles = parse_list<double>("lambda_percentiles", *v);
  if (auto v = get("lr_grid")) cfg.lr_grid = parse_list<double>("lr_grid", *v);
  if (auto v = get("seeds")) cfg.seeds = parse_list<std::uint64_t>("seeds", *v);
  if (auto v = get("batch_size")) cfg.batch_size = parse_number<Index>("batch_size", *v);
  if (auto v = get("heldout_cap")) cfg.heldout_cap = parse_number<Index>("heldout_cap", *v);
  if (auto v = get("heldout_fraction")) cfg.heldout_fraction = parse_number<double>("heldout_fraction", *v);
  if (auto v = get("split_seed")) cfg.split_seed = parse_number<std::uint64_t>("split_seed", *v);
  if (auto v = get("max_decays")) cfg.max_decays = parse_number<int>("max_decays", *v);
  if (auto v = get("max_epochs")) cfg.max_epochs = parse_number<int>("max_epochs", *v);
  if (auto v = get("double_sampling")) cfg.double_sampling = parse_bool("double_sampling", *v);
  if (auto v = get("sigma_sq")) cfg.sigma_sq = parse_number<double>("sigma_sq", *v);
  if (auto v = get("rho_fail")) cfg.rho_fail = parse_number<double>("rho_fail", *v);
  if (auto v = get("thm2_delta1")) cfg.thm2_delta1 = parse_number<double>("thm2_delta1", *v);
  if (auto v = get("thm2_delta2")) cfg.thm2_delta2 = parse_number<double>("thm2_delta2", *v);
  if (auto v = get("theory_max_n")) cfg.theory_max_n = parse_number<Index>("theory_max_n", *v);
  if (auto v = get("strict_memory")) cfg.strict_memory = parse_bool("strict_memory", *v);
  if (auto v = get("d")) cfg.input_dim = parse_number<Index>("d", *v);
  if (auto v = get("c")) cfg.outputs = parse_number<Index>("c", *v);
  if (auto v = get("output_dir")) cfg.output_dir = *v;
  const std::string pairs = kv.get("spearman_pairs").value_or(
      "inv_one_minus_delta1:heldout_metric,frob_sq:heldout_metric,spectral:heldout_metric,"
      "delta:heldout_metric,max_inv_delta2:heldout_metric");
  for (const auto& item : config::split_list(pairs)) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("spearman_pairs items must be x:y");
    cfg.spearman_pairs.emplace_back(item.substr(0, colon), item.substr(colon + 1));
  }

  if (cfg.methods.empty()) throw ConfigError("methods must list at least one method");
  if (cfg.m_grid.empty()) throw ConfigError("m_grid must not be empty");
  if (cfg.seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (cfg.lr_grid.empty()) throw ConfigError("lr_grid must not be empty");
  if (cfg.b_grid.empty()) throw ConfigError("b_grid must not be empty");
  for (auto m : cfg.m_grid) if (m < 1) throw ConfigError("m_grid entries must be positive");
  for (auto b : cfg.b_grid) {
    if (!quantize::supported_bits(b)) throw ConfigError("b_grid entries must be 1, 2, 4, 8 or 16");
  }
  for (auto lr : cfg.lr_grid) if (!(lr > 0.0)) throw ConfigError("lr_grid entries must be positive");
  for (auto p : cfg.lambda_percentiles) {
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("lambda_percentiles must lie in [0, 100]");
  }
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (cfg.heldout_cap < 1) throw ConfigError("heldout_cap must be at least 1");
  if (cfg.outputs < 1) throw ConfigError("c must be at least 1");
  cfg.hash = config::fnv1a_hex(kv.canonical());
  return cfg;
}

std::string Cell::id() const {
  std::string out = std::string(memory::to_string(method)) + "-m" + std::to_string(m);
  if (bits) out += "-b" + std::to_string(*bits);
  return out + "-s" + std::to_string(seed);
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (auto method : cfg.methods) {
    for (auto m : cfg.m_grid) {
      std::vector<std::optional<int>> precisions{std::nullopt};
      if (method == memory::Method::kLpRff) {
        precisions.clear();
        for (int b : cfg.b_grid) precisions.emplace_back(b);
      }
      for (const auto& bits : precisions) {
        for (auto seed : cfg.seeds) cells.push_back({method, m, bits, seed});
      }
    }
  }
  return cells;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.train_path.empty()) throw ConfigError("config key 'train_path' is required");
  data::Dataset train = load_any(cfg.train_path, cfg.format);
  data::Dataset heldout;
  if (cfg.heldout_path) {
    heldout = load_any(*cfg.heldout_path, cfg.format);
    const Index d = std::max(train.dim(), heldout.dim());
    train = data::with_dim(train, d);
    heldout = data::with_dim(heldout, d);
  } else {
    try {
      std::tie(train, heldout) = data::split_heldout(train, cfg.heldout_fraction, cfg.split_seed);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("cannot split heldout set: ") + e.what());
    }
  }
  if (cfg.task == data::Task::kClassification) {
    // Shared class index map across both parts.
    const Index n_train = train.size();
    data::Dataset all;
    all.x = Matrix(n_train + heldout.size(), train.dim());
    all.x << train.x, heldout.x;
    all.labels = Vector(all.x.rows());
    all.labels << train.labels, heldout.labels;
    all = data::to_classification(all);
    train.labels = all.labels.head(n_train);
    heldout.labels = all.labels.tail(heldout.size());
    train.task = heldout.task = data::Task::kClassification;
    train.num_classes = heldout.num_classes = all.num_classes;
  }
  auto normalized = data::normalize(train, {heldout});
  return {std::move(normalized.train), std::move(normalized.others.front())};
}

features::FeatureMap make_map(const Cell& cell, double gamma, const data::Dataset& train) {
  const kernel::GaussianKernel k(gamma);
  const std::uint64_t seed = rng::derive(cell.seed, kMapSalt);
  switch (cell.method) {
    case memory::Method::kNystrom:
      return features::sample_nystrom(train.x, k, cell.m, seed);
    case memory::Method::kRff:
      return features::sample_rff(k, cell.m, train.dim(), seed);
    case memory::Method::kCirculantRff:
    case memory::Method::kLpRff:
      return features::sample_circulant_rff(k, cell.m, train.dim(), seed);
  }
  throw std::logic_error("unhandled method");
}

std::vector<std::pair<std::string, double>> lambda_sweep(const ExperimentConfig& cfg,
                                                         const Vector& eigs_desc) {
  std::vector<std::pair<std::string, double>> out;
  for (double v : cfg.lambda_grid) out.emplace_back("value", v);
  const Index n = eigs_desc.size();
  for (double p : cfg.lambda_percentiles) {
    if (n == 0) break;
    const auto idx = static_cast<Index>(std::llround(p / 100.0 * static_cast<double>(n - 1)));
    out.emplace_back("p" + num(p), eigs_desc[idx]);
  }
  return out;
}

int run_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto prepared = prepare_data(cfg);
  ensure_dir(cfg.output_dir / "runs");
  const double lr = tune_learning_rate(cfg, prepared, log);
  CsvWriter csv(cfg.output_dir / "results.csv",
                {"cell_id", "method", "m", "b", "seed", "lr", "epochs", "heldout_metric",
                 "heldout_loss", "feature_gen_bits", "batch_bits", "params_bits", "total_bits",
                 "version", "config_hash"});
  int status = 0;
  const memory::Shape base{0, static_cast<std::uint64_t>(prepared.train.dim()),
                           static_cast<std::uint64_t>(cfg.batch_size),
                           static_cast<std::uint64_t>(footprint_outputs(prepared.train))};
  for (const auto& cell : enumerate_cells(cfg)) {
    try {
      const auto map = make_map(cell, cfg.gamma, prepared.train);
      trainer::TrainConfig tc;
      tc.initial_lr = lr;
      tc.batch_size = cfg.batch_size;
      tc.max_decays = cfg.max_decays;
      tc.max_epochs = cfg.max_epochs;
      tc.loss = trainer::default_loss(prepared.train);
      if (cell.bits) tc.quantization = trainer::QuantizationConfig{*cell.bits, cfg.double_sampling};
      const auto result = trainer::train_sgd(map, prepared.train, prepared.heldout, tc, cell.seed);

      memory::Shape shape = base;
      shape.m = static_cast<std::uint64_t>(cell.m);
      const auto fp = memory::footprint(cell.method, shape, cell.bits, cfg.strict_memory);

      const fs::path dir = cfg.output_dir / "runs" / cell.id();
      ensure_dir(dir);
      {
        std::ofstream jsonl(dir / "log.jsonl");
        result.log.write_jsonl(jsonl);
        std::ofstream model(dir / "model.bin", std::ios::binary);
        trainer::save_model(result.model, model);
      }
      csv.row({cell.id(), std::string(memory::to_string(cell.method)), std::to_string(cell.m),
               bits_field(cell), std::to_string(cell.seed), num(lr),
               std::to_string(result.log.final_epoch), num(result.log.best_metric),
               num(result.log.best_loss), std::to_string(fp.feature_gen_bits),
               std::to_string(fp.batch_bits), std::to_string(fp.params_bits),
               std::to_string(fp.total_bits), version(), cfg.hash});
      log << cell.id() << ": heldout metric " << result.log.best_metric << "\n";
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      log << cell.id() << ": FAILED: " << e.what() << "\n";
      status = 1;
    }
  }
  return status;
}

int run_metrics(const ExperimentConfig& cfg, std::ostream& log) {
  const auto prepared = prepare_data(cfg);
  ensure_dir(cfg.output_dir);
  const auto heldout = data::subsample(prepared.heldout, cfg.heldout_cap,
                                       rng::derive(cfg.split_seed, kSubsampleSalt));
  const kernel::GaussianKernel k(cfg.gamma);
  const Matrix kmat = kernel::gram(k, heldout.x);
  const metrics::DeltaEvaluator evaluator(kmat);
  const auto lambdas = lambda_sweep(cfg, evaluator.eigenvalues());
  if (lambdas.empty()) throw ConfigError("metrics needs lambda_grid or lambda_percentiles");
  const Index n = heldout.size();

  CsvWriter csv(cfg.output_dir / "metrics.csv",
                {"cell_id", "method", "m", "b", "seed", "n", "lambda_source", "lambda", "frob_sq",
                 "spectral", "delta1", "delta2", "delta", "inv_one_minus_delta1", "rank",
                 "rank_floor", "delta_b_sq_over_lambda", "version", "config_hash"});
  int status = 0;
  for (const auto& cell : enumerate_cells(cfg)) {
    try {
      const auto map = make_map(cell, cfg.gamma, prepared.train);
      const Matrix z = cell_features(cell, map, heldout.x, 0);
      const Matrix k_approx = z * z.transpose();
      const auto norms = metrics::error_norms(kmat, k_approx);
      const Index rank = approx_rank(cell, map, n);
      for (const auto& [source, lambda] : lambdas) {
        if (!(lambda > 0.0)) {
          log << cell.id() << ": skipping non-positive lambda " << lambda << " (" << source << ")\n";
          continue;
        }
        const auto deltas = evaluator(k_approx, lambda);
        const double floor = metrics::delta1_rank_floor(evaluator.eigenvalues(), rank, lambda);
        const double dsq = theory::quantization_variance(cell.bits.value_or(theory::kFullPrecision));
        csv.row({cell.id(), std::string(memory::to_string(cell.method)), std::to_string(cell.m),
                 bits_field(cell), std::to_string(cell.seed), std::to_string(n), source, num(lambda),
                 num(norms.frob_sq), num(norms.spectral), num(deltas.delta1), num(deltas.delta2),
                 num(deltas.delta), num(deltas.delta1 < 1.0 ? 1.0 / (1.0 - deltas.delta1)
                                                            : std::numeric_limits<double>::infinity()),
                 std::to_string(rank), num(floor), num(dsq / lambda), version(), cfg.hash});
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      log << cell.id() << ": FAILED: " << e.what() << "\n";
      status = 1;
    }
  }
  return status;
}

namespace {

struct TheoryRow {
  std::string group;
  std::map<std::string, double> values;
};

// Heldout metric of kernel ridge regression on the given features.
double closed_form_heldout(const Matrix& z_train, const Matrix& z_heldout, const data::Dataset& train,
                           const data::Dataset& heldout, double lambda) {
  const Matrix k_approx = z_train * z_train.transpose();
  if (train.task == data::Task::kRegression) {
    const Vector alpha = theory::ridge_fit(k_approx, train.labels, lambda);
    const Vector pred = z_heldout * (z_train.transpose() * alpha);
    return (pred - heldout.labels).squaredNorm() / static_cast<double>(heldout.size());
  }
  const Index c = train.num_classes;
  Matrix scores(heldout.size(), c);
  for (Index cls = 0; cls < c; ++cls) {
    const Vector target = (train.labels.array() == static_cast<double>(cls)).cast<double>();
    const Vector alpha = theory::ridge_fit(k_approx, target, lambda);
    scores.col(cls) = z_heldout * (z_train.transpose() * alpha);
  }
  double errors = 0.0;
  for (Index i = 0; i < heldout.size(); ++i) {
    Index predicted = 0;
    scores.row(i).maxCoeff(&predicted);
    if (predicted != static_cast<Index>(heldout.labels[i])) errors += 1.0;
  }
  return errors / static_cast<double>(heldout.size());
}

}  // namespace

int run_theory(const ExperimentConfig& cfg, std::ostream& log) {
  auto prepared = prepare_data(cfg);
  ensure_dir(cfg.output_dir);
  if (prepared.train.size() > cfg.theory_max_n) {
    log << "theory: subsampling " << prepared.train.size() << " training points to "
        << cfg.theory_max_n << "\n";
    prepared.train = data::subsample(prepared.train, cfg.theory_max_n,
                                     rng::derive(cfg.split_seed, kSubsampleSalt + 1));
  }
  const auto heldout = data::subsample(prepared.heldout, cfg.heldout_cap,
                                       rng::derive(cfg.split_seed, kSubsampleSalt));
  const auto& train = prepared.train;
  const kernel::GaussianKernel k(cfg.gamma);
  const Matrix kmat = kernel::gram(k, train.x);
  const metrics::DeltaEvaluator evaluator(kmat);
  const Vector& eigs = evaluator.eigenvalues();
  const auto lambdas = lambda_sweep(cfg, eigs);
  if (lambdas.empty()) throw ConfigError("theory needs lambda_grid or lambda_percentiles");
  const Index n = train.size();
  const Vector& y_bar = train.labels;

  const std::vector<std::string> columns = {
      "delta1", "delta2", "delta", "inv_one_minus_delta1", "max_inv_delta2", "frob_sq", "spectral",
      "rank", "risk", "risk_hat_exact", "bias_sq", "variance_term", "prop1_rhs", "prop1_holds",
      "thm2_prob", "a_trace", "sandwich_holds", "m_min_delta1", "m_min_delta2", "heldout_metric"};
  std::vector<std::string> header = {"cell_id", "method", "m", "b", "seed", "n", "lambda_source", "lambda"};
  header.insert(header.end(), columns.begin(), columns.end());
  header.insert(header.end(), {"thm2_delta1", "thm2_delta2", "thm2_status", "version", "config_hash"});
  CsvWriter csv(cfg.output_dir / "theory.csv", header);

  std::map<std::string, double> risk_hat;
  for (const auto& [source, lambda] : lambdas) {
    if (lambda > 0.0) risk_hat[num(lambda)] = theory::risk_exact({kmat, y_bar, cfg.sigma_sq, lambda}).risk_hat;
  }

  std::vector<TheoryRow> rows;
  int status = 0;
  for (const auto& cell : enumerate_cells(cfg)) {
    try {
      const auto map = make_map(cell, cfg.gamma, train);
      const Matrix z = cell_features(cell, map, train.x, 0);
      const Matrix zh = cell_features(cell, map, heldout.x, 1);
      const Matrix k_approx = z * z.transpose();
      const auto norms = metrics::error_norms(kmat, k_approx);
      const Index rank = approx_rank(cell, map, n);
      const int bits = cell.bits.value_or(theory::kFullPrecision);
      for (const auto& [source, lambda] : lambdas) {
        if (!(lambda > 0.0)) continue;
        const auto deltas = evaluator(k_approx, lambda);
        const auto risk = theory::risk_of_approx(kmat, k_approx, y_bar, cfg.sigma_sq, lambda);
        const double rhs = theory::prop1_bound(risk_hat.at(num(lambda)), deltas, rank, n, cfg.sigma_sq);
        std::string thm2_status = "ok";
        double prob = std::numeric_limits<double>::quiet_NaN();
        double a = theory::a_trace(eigs, lambda, bits);
        try {
          const auto t = theory::thm2_prob_bound(eigs, lambda, bits, cell.m, cfg.thm2_delta1, cfg.thm2_delta2);
          prob = t.prob;
        } catch (const PreconditionError&) {
          thm2_status = "thm2-precondition-violated";
        }
        auto m_min = [&](theory::DeltaTarget target, double delta) -> double {
          try {
            return static_cast<double>(theory::corollary_feature_count(eigs, lambda, bits, target, delta, cfg.rho_fail));
          } catch (const std::invalid_argument&) {
            return -1.0;
          }
        };
        const double inv = deltas.delta1 < 1.0 ? 1.0 / (1.0 - deltas.delta1)
                                               : std::numeric_limits<double>::infinity();
        TheoryRow row;
        row.group = std::string(memory::to_string(cell.method)) + "," + std::to_string(cell.m) + "," +
                    bits_field(cell) + "," + source + "," + num(lambda);
        row.values = {{"delta1", deltas.delta1},
                      {"delta2", deltas.delta2},
                      {"delta", deltas.delta},
                      {"inv_one_minus_delta1", inv},
                      {"max_inv_delta2", std::max(inv, deltas.delta2)},
                      {"frob_sq", norms.frob_sq},
                      {"spectral", norms.spectral},
                      {"rank", static_cast<double>(rank)},
                      {"risk", risk.risk},
                      {"risk_hat_exact", risk_hat.at(num(lambda))},
                      {"bias_sq", risk.bias_sq},
                      {"variance_term", risk.variance_term},
                      {"prop1_rhs", rhs},
                      {"prop1_holds", risk.risk <= rhs + 1e-8 ? 1.0 : 0.0},
                      {"thm2_prob", prob},
                      {"a_trace", a},
                      {"sandwich_holds", deltas.delta1 <= cfg.thm2_delta1 && deltas.delta2 <= cfg.thm2_delta2 ? 1.0 : 0.0},
                      {"m_min_delta1", m_min(theory::DeltaTarget::kDelta1, cfg.thm2_delta1)},
                      {"m_min_delta2", m_min(theory::DeltaTarget::kDelta2, cfg.thm2_delta2)},
                      {"heldout_metric", closed_form_heldout(z, zh, train, heldout, lambda)}};
        std::vector<std::string> fields = {cell.id(), std::string(memory::to_string(cell.method)),
                                           std::to_string(cell.m), bits_field(cell),
                                           std::to_string(cell.seed), std::to_string(n), source, num(lambda)};
        for (const auto& c : columns) fields.push_back(num(row.values.at(c)));
        fields.insert(fields.end(), {num(cfg.thm2_delta1), num(cfg.thm2_delta2), thm2_status, version(), cfg.hash});
        csv.row(fields);
        rows.push_back(std::move(row));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      log << cell.id() << ": FAILED: " << e.what() << "\n";
      status = 1;
    }
  }

  // Empirical sandwich frequency per configuration, across seeds.
  CsvWriter summary(cfg.output_dir / "theory_summary.csv",
                    {"method", "m", "b", "lambda_source", "lambda", "runs", "sandwich_frequency",
                     "thm2_prob", "version", "config_hash"});
  std::map<std::string, std::pair<int, int>> counts;
  std::map<std::string, double> probs;
  for (const auto& row : rows) {
    auto& [runs, holds] = counts[row.group];
    ++runs;
    holds += row.values.at("sandwich_holds") > 0.5 ? 1 : 0;
    probs[row.group] = row.values.at("thm2_prob");
  }
  for (const auto& [group, c] : counts) {
    summary.row({group, std::to_string(c.first), num(static_cast<double>(c.second) / c.first),
                 num(probs[group]), version(), cfg.hash});
  }

  // Rank correlations over unaveraged runs.
  CsvWriter spearman(cfg.output_dir / "spearman.csv", {"x", "y", "rho", "runs", "version", "config_hash"});
  for (const auto& [xcol, ycol] : cfg.spearman_pairs) {
    std::vector<double> xs, ys;
    for (const auto& row : rows) {
      auto xi = row.values.find(xcol);
      auto yi = row.values.find(ycol);
      if (xi == row.values.end() || yi == row.values.end()) {
        throw ConfigError("spearman_pairs: unknown column in '" + xcol + ":" + ycol + "'");
      }
      if (std::isfinite(xi->second) && std::isfinite(yi->second)) {
        xs.push_back(xi->second);
        ys.push_back(yi->second);
      }
    }
    std::string rho;
    try {
      rho = num(metrics::spearman_rho(xs, ys));
    } catch (const std::invalid_argument&) {
      rho = "";  // undefined: fewer than two runs or constant column
    }
    spearman.row({xcol, ycol, rho, std::to_string(xs.size()), version(), cfg.hash});
  }
  return status;
}

int run_memory(const ExperimentConfig& cfg, std::ostream& out) {
  Index d = 0;
  Index c = cfg.outputs;
  if (cfg.input_dim) {
    d = *cfg.input_dim;
  } else if (!cfg.train_path.empty()) {
    const auto prepared = prepare_data(cfg);
    d = prepared.train.dim();
    c = footprint_outputs(prepared.train);
  } else {
    throw ConfigError("memory needs config key 'd' or a train_path");
  }
  ensure_dir(cfg.output_dir);
  CsvWriter csv(cfg.output_dir / "memory.csv",
                {"method", "m", "d", "s", "c", "b", "feature_gen_bits", "batch_bits", "params_bits",
                 "total_bits", "version", "config_hash"});
  std::set<std::string> seen;
  for (auto cell : enumerate_cells(cfg)) {
    cell.seed = 0;
    if (!seen.insert(cell.id()).second) continue;
    const memory::Shape shape{static_cast<std::uint64_t>(cell.m), static_cast<std::uint64_t>(d),
                              static_cast<std::uint64_t>(cfg.batch_size), static_cast<std::uint64_t>(c)};
    const auto fp = memory::footprint(cell.method, shape, cell.bits, cfg.strict_memory);
    std::vector<std::string> fields = {std::string(memory::to_string(cell.method)), std::to_string(cell.m),
                                       std::to_string(d), std::to_string(cfg.batch_size), std::to_string(c),
                                       bits_field(cell), std::to_string(fp.feature_gen_bits),
                                       std::to_string(fp.batch_bits), std::to_string(fp.params_bits),
                                       std::to_string(fp.total_bits), version(), cfg.hash};
    csv.row(fields);
    out << memory::to_string(cell.method) << " m=" << cell.m;
    if (cell.bits) out << " b=" << *cell.bits;
    out << ": " << fp.total_bits << " bits (feature gen " << fp.feature_gen_bits << ", batch "
        << fp.batch_bits << ", params " << fp.params_bits << ")\n";
  }
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  int status = run_train(cfg, log);
  status = std::max(status, run_metrics(cfg, log));
  status = std::max(status, run_theory(cfg, log));
  return status;
}

}  // namespace lprff::experiment
