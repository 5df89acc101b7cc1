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

#include "lprff/trainer.hpp"

#include "lprff/binio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <ostream>

namespace lprff::trainer {

namespace {

constexpr std::uint64_t kEvalEpoch = ~0ULL;
constexpr Index kEvalBatch = 1024;
constexpr std::uint64_t kQuantSalt = 0x71756e74;
constexpr std::uint64_t kShuffleSalt = 0x73687566;
constexpr std::uint32_t kModelMagic = 0x444d504c;  // "LPMD"
constexpr std::uint32_t kModelVersion = 1;

// Row-wise softmax probabilities of the logits.
Matrix softmax(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  return p.array().colwise() / p.rowwise().sum().array();
}

double mean_cross_entropy(const Matrix& logits, const Vector& labels) {
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double lse = top + std::log((logits.row(i).array() - top).exp().sum());
    total += lse - logits(i, static_cast<Index>(labels[i]));
  }
  return total / static_cast<double>(logits.rows());
}

// Prediction error signal dL/dlogits times s.
Matrix residual(const Matrix& logits, const Vector& labels, Loss loss) {
  if (loss == Loss::kMse) return logits - labels;
  Matrix r = softmax(logits);
  for (Index i = 0; i < r.rows(); ++i) r(i, static_cast<Index>(labels[i])) -= 1.0;
  return r;
}

void check_shapes(const Matrix& theta, const Matrix& z, const Vector& labels, Loss loss) {
  if (z.cols() != theta.rows() || z.rows() != labels.size()) {
    throw std::invalid_argument("gradient: feature/model/label shapes disagree");
  }
  if (loss == Loss::kMse && theta.cols() != 1) throw std::invalid_argument("MSE loss needs a single output");
}

Matrix rows_of(const Matrix& x, const std::vector<Index>& order, Index first, Index count) {
  Matrix out(count, x.cols());
  for (Index i = 0; i < count; ++i) out.row(i) = x.row(order[static_cast<std::size_t>(first + i)]);
  return out;
}

}  // namespace

void TrainLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : epochs) {
    nlohmann::json j = {{"epoch", e.epoch},     {"heldout_loss", e.heldout_loss},
                        {"heldout_metric", e.heldout_metric}, {"lr", e.lr},
                        {"decays", e.decays},   {"decayed", e.decayed},
                        {"reverted", e.reverted}};
    out << j.dump() << '\n';
  }
}

EarlyStopper::EarlyStopper(double initial_loss, double initial_lr, int max_decays,
                           double improvement_threshold)
    : best_(initial_loss), lr_(initial_lr), max_decays_(max_decays), threshold_(improvement_threshold) {
  if (!(initial_lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (max_decays < 0) throw std::invalid_argument("max_decays must be non-negative");
}

EarlyStopper::Decision EarlyStopper::observe(double loss) {
  Decision d;
  d.decay = !(loss < (1.0 - threshold_) * best_);
  d.revert = loss > best_;
  d.improved = loss < best_;
  if (d.improved) best_ = loss;
  if (d.decay) {
    lr_ *= 0.5;
    ++decays_;
  }
  return d;
}

Featurizer::Featurizer(Source source, Index output_dim)
    : source_(std::move(source)), output_dim_(output_dim) {}

Featurizer Featurizer::make(features::FeatureMap map, std::optional<QuantizationConfig> quantization,
                            std::uint64_t seed, const Matrix& train_x) {
  const Index dim = features::output_dim(map);
  if (!quantization) {
    return Featurizer(
        [map = std::move(map)](const Matrix& xb, rng::StreamId) {
          Matrix z = features::apply(map, xb);
          return std::pair<Matrix, Matrix>{z, z};
        },
        dim);
  }
  const QuantizationConfig q = *quantization;
  const std::uint64_t noise_seed = rng::derive(seed, kQuantSalt);
  if (features::is_fourier(map)) {
    return Featurizer(
        [map = std::move(map), q, noise_seed](const Matrix& xb, rng::StreamId stream) {
          const Matrix z = features::apply(map, xb);
          if (q.double_sampling) {
            auto [fwd, bwd] = quantize::double_sample(z, q.bits, noise_seed, stream);
            return std::pair<Matrix, Matrix>{quantize::dequantize(fwd), quantize::dequantize(bwd)};
          }
          Matrix zq = quantize::dequantize(quantize::quantize_stochastic(z, q.bits, noise_seed, stream));
          return std::pair<Matrix, Matrix>{zq, zq};
        },
        dim);
  }
  // Nystrom features have no fixed range: fit per-feature ranges on train.
  Matrix lo = Matrix::Constant(1, dim, std::numeric_limits<double>::infinity());
  Matrix hi = Matrix::Constant(1, dim, -std::numeric_limits<double>::infinity());
  for (Index first = 0; first < train_x.rows(); first += kEvalBatch) {
    const Index count = std::min(kEvalBatch, train_x.rows() - first);
    const Matrix z = features::apply(map, train_x.middleRows(first, count));
    lo = lo.cwiseMin(z.colwise().minCoeff());
    hi = hi.cwiseMax(z.colwise().maxCoeff());
  }
  quantize::NystromQuantizer ranges{lo.transpose(), hi.transpose(), q.bits};
  return Featurizer(
      [map = std::move(map), q, noise_seed, ranges](const Matrix& xb, rng::StreamId stream) {
        const Matrix z = features::apply(map, xb);
        rng::StreamId fwd = stream;
        fwd.lane = rng::kForward;
        Matrix zf = quantize::dequantize(quantize::quantize_nystrom(z, ranges, noise_seed, fwd), ranges);
        if (!q.double_sampling) return std::pair<Matrix, Matrix>{zf, zf};
        rng::StreamId bwd = stream;
        bwd.lane = rng::kBackward;
        Matrix zb = quantize::dequantize(quantize::quantize_nystrom(z, ranges, noise_seed, bwd), ranges);
        return std::pair<Matrix, Matrix>{std::move(zf), std::move(zb)};
      },
      dim);
}

double objective(const Matrix& theta, const Matrix& z, const Vector& labels, Loss loss, double l2) {
  check_shapes(theta, z, labels, loss);
  const Matrix logits = z * theta;
  const double reg = 0.5 * l2 * theta.squaredNorm();
  if (loss == Loss::kMse) return 0.5 * (logits.col(0) - labels).squaredNorm() / static_cast<double>(z.rows()) + reg;
  return mean_cross_entropy(logits, labels) + reg;
}

Matrix gradient(const Matrix& theta, const Matrix& z, const Vector& labels, Loss loss, double l2) {
  return gradient(theta, z, z, labels, loss, l2);
}

Matrix gradient(const Matrix& theta, const Matrix& z_forward, const Matrix& z_backward,
                const Vector& labels, Loss loss, double l2) {
  check_shapes(theta, z_forward, labels, loss);
  if (z_backward.rows() != z_forward.rows() || z_backward.cols() != z_forward.cols()) {
    throw std::invalid_argument("gradient: forward/backward feature shapes differ");
  }
  Matrix g = z_backward.transpose() * residual(z_forward * theta, labels, loss);
  g /= static_cast<double>(z_forward.rows());
  if (l2 != 0.0) g += l2 * theta;
  return g;
}

Loss default_loss(const data::Dataset& ds) {
  return ds.task == data::Task::kRegression ? Loss::kMse : Loss::kSoftmaxCrossEntropy;
}

Evaluation evaluate(const LinearModel& model, const Featurizer& featurizer,
                    const data::Dataset& ds, Loss loss) {
  Evaluation out;
  const Index n = ds.size();
  if (n == 0) return out;
  double loss_sum = 0.0;
  double metric_sum = 0.0;
  for (Index first = 0, batch = 0; first < n; first += kEvalBatch, ++batch) {
    const Index count = std::min(kEvalBatch, n - first);
    const Matrix z = featurizer.forward(ds.x.middleRows(first, count),
                                        {kEvalEpoch, static_cast<std::uint64_t>(batch), rng::kForward});
    const Matrix logits = z * model.theta;
    const Vector labels = ds.labels.segment(first, count);
    if (loss == Loss::kMse) {
      const double sse = (logits.col(0) - labels).squaredNorm();
      loss_sum += sse;
      metric_sum += sse;
    } else {
      loss_sum += mean_cross_entropy(logits, labels) * static_cast<double>(count);
      for (Index i = 0; i < count; ++i) {
        Index predicted = 0;
        logits.row(i).maxCoeff(&predicted);
        if (predicted != static_cast<Index>(labels[i])) metric_sum += 1.0;
      }
    }
  }
  out.surrogate_loss = loss_sum / static_cast<double>(n);
  out.task_metric = metric_sum / static_cast<double>(n);
  return out;
}

TrainResult train_sgd(const Featurizer& featurizer, const data::Dataset& train,
                      const data::Dataset& heldout, const TrainConfig& config, std::uint64_t seed) {
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (train.dim() != heldout.dim()) throw std::invalid_argument("train/heldout dimension mismatch");
  train.validate();
  heldout.validate();
  const Index outputs = config.loss == Loss::kMse ? 1 : std::max(train.num_classes, 2);

  TrainResult result;
  result.model.theta = Matrix::Zero(featurizer.output_dim(), outputs);
  LinearModel best = result.model;
  auto initial = evaluate(result.model, featurizer, heldout, config.loss);
  EarlyStopper stopper(initial.surrogate_loss, config.initial_lr, config.max_decays,
                       config.improvement_threshold);
  TrainLog& log = result.log;
  log.initial_loss = initial.surrogate_loss;
  log.best_loss = initial.surrogate_loss;
  log.best_metric = initial.task_metric;

  const Index n = train.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (int epoch = 1; !stopper.done() && epoch <= config.max_epochs; ++epoch) {
    const double lr = stopper.lr();
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 shuffle_gen(rng::derive(seed, kShuffleSalt + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_gen);
    for (Index first = 0, batch = 0; first < n; first += config.batch_size, ++batch) {
      const Index count = std::min(config.batch_size, n - first);
      const Matrix xb = rows_of(train.x, order, first, count);
      Vector yb(count);
      for (Index i = 0; i < count; ++i) yb[i] = train.labels[order[static_cast<std::size_t>(first + i)]];
      const auto [zf, zb] = featurizer(xb, {static_cast<std::uint64_t>(epoch),
                                            static_cast<std::uint64_t>(batch), rng::kForward});
      result.model.theta -= lr * gradient(result.model.theta, zf, zb, yb, config.loss, config.l2);
    }
    const auto eval = evaluate(result.model, featurizer, heldout, config.loss);
    if (!std::isfinite(eval.surrogate_loss) || !result.model.theta.allFinite()) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " with learning rate " + std::to_string(lr));
    }
    const auto decision = stopper.observe(eval.surrogate_loss);
    if (decision.improved) {
      best = result.model;
      log.best_loss = eval.surrogate_loss;
      log.best_metric = eval.task_metric;
    }
    if (decision.revert) result.model = best;
    log.epochs.push_back({epoch, eval.surrogate_loss, eval.task_metric, lr, stopper.decays(),
                          decision.decay, decision.revert});
    log.final_epoch = epoch;
  }
  result.model = std::move(best);
  return result;
}

TrainResult train_sgd(const features::FeatureMap& map, const data::Dataset& train,
                      const data::Dataset& heldout, const TrainConfig& config, std::uint64_t seed) {
  return train_sgd(Featurizer::make(map, config.quantization, seed, train.x), train, heldout, config, seed);
}

void save_model(const LinearModel& model, std::ostream& out) {
  binio::write<std::uint32_t>(out, kModelMagic);
  binio::write<std::uint32_t>(out, kModelVersion);
  binio::write_matrix(out, model.theta);
  if (!out) throw std::runtime_error("failed to write model");
}

LinearModel load_model(std::istream& in) {
  if (binio::read<std::uint32_t>(in) != kModelMagic) throw ParseError("not a model file", 0);
  if (binio::read<std::uint32_t>(in) != kModelVersion) throw ParseError("unsupported model version", 0);
  return {binio::read_matrix(in)};
}

}  // namespace lprff::trainer
