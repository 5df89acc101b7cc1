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
#include "lprff/data.hpp"
#include "lprff/features.hpp"
#include "lprff/quantize.hpp"
#include "lprff/rng.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace lprff::trainer {

enum class Loss { kMse, kSoftmaxCrossEntropy };

struct QuantizationConfig {
  int bits = 8;
  bool double_sampling = false;
};

struct TrainConfig {
  double initial_lr = 0.5;
  Index batch_size = 250;
  int max_decays = 10;
  double improvement_threshold = 0.01;
  Loss loss = Loss::kMse;
  std::optional<QuantizationConfig> quantization;
  double l2 = 0.0;
  int max_epochs = 1000;
};

/// theta is m x c (c = 1 for regression).
struct LinearModel {
  Matrix theta;
};

struct EpochRecord {
  int epoch = 0;
  double heldout_loss = 0.0;
  double heldout_metric = 0.0;
  double lr = 0.0;  // rate used during this epoch
  int decays = 0;   // cumulative, after this epoch's decision
  bool decayed = false;
  bool reverted = false;
};

struct TrainLog {
  double initial_loss = 0.0;
  std::vector<EpochRecord> epochs;
  int final_epoch = 0;
  double best_loss = 0.0;
  double best_metric = 0.0;

  /// One JSON object per epoch.
  void write_jsonl(std::ostream& out) const;
};

/// Learning-rate decay / revert protocol evaluated at each epoch end: halve
/// the rate unless the heldout loss beats 0.99x the best so far (threshold
/// configurable), and revert to the best model when the loss got worse.
class EarlyStopper {
 public:
  struct Decision {
    bool improved = false;  // new best model
    bool decay = false;
    bool revert = false;
  };

  EarlyStopper(double initial_loss, double initial_lr, int max_decays,
               double improvement_threshold = 0.01);

  Decision observe(double loss);

  double lr() const noexcept { return lr_; }
  int decays() const noexcept { return decays_; }
  double best() const noexcept { return best_; }
  bool done() const noexcept { return decays_ >= max_decays_; }

 private:
  double best_;
  double lr_;
  int decays_ = 0;
  int max_decays_;
  double threshold_;
};

/// Produces (forward, backward) feature blocks for a mini-batch. The two are
/// the same matrix unless double sampling is on.
class Featurizer {
 public:
  using Source = std::function<std::pair<Matrix, Matrix>(const Matrix&, rng::StreamId)>;

  Featurizer(Source source, Index output_dim);

  /// Wraps a feature map, quantizing each batch with noise keyed by
  /// (seed, stream). Nystrom ranges are fitted on `train_x` when quantized.
  static Featurizer make(features::FeatureMap map, std::optional<QuantizationConfig> quantization,
                         std::uint64_t seed, const Matrix& train_x);

  std::pair<Matrix, Matrix> operator()(const Matrix& xb, rng::StreamId stream) const {
    return source_(xb, stream);
  }
  Matrix forward(const Matrix& xb, rng::StreamId stream) const { return source_(xb, stream).first; }
  Index output_dim() const noexcept { return output_dim_; }

 private:
  Source source_;
  Index output_dim_;
};

/// Loss whose gradient `gradient` returns: 1/2 mean squared error for kMse,
/// mean softmax cross-entropy otherwise, plus (l2/2)|theta|^2.
double objective(const Matrix& theta, const Matrix& z, const Vector& labels, Loss loss,
                 double l2 = 0.0);

/// Mean batch gradient (m x c).
Matrix gradient(const Matrix& theta, const Matrix& z, const Vector& labels, Loss loss,
                double l2 = 0.0);

/// Gradient with the residual computed from `z_forward` and propagated
/// through `z_backward`.
Matrix gradient(const Matrix& theta, const Matrix& z_forward, const Matrix& z_backward,
                const Vector& labels, Loss loss, double l2 = 0.0);

struct Evaluation {
  double task_metric = 0.0;     // MSE or misclassification rate
  double surrogate_loss = 0.0;  // MSE or mean cross-entropy
};

/// Features for evaluation are drawn from a fixed stream so repeated
/// evaluations agree.
Evaluation evaluate(const LinearModel& model, const Featurizer& featurizer,
                    const data::Dataset& ds, Loss loss);

struct TrainResult {
  LinearModel model;
  TrainLog log;
};

/// Mini-batch SGD from a zero model with per-epoch shuffling and fresh
/// quantization noise per (epoch, batch). Returns the best model by heldout
/// loss. Throws NumericalError on divergence.
TrainResult train_sgd(const Featurizer& featurizer, const data::Dataset& train,
                      const data::Dataset& heldout, const TrainConfig& config, std::uint64_t seed);

TrainResult train_sgd(const features::FeatureMap& map, const data::Dataset& train,
                      const data::Dataset& heldout, const TrainConfig& config, std::uint64_t seed);

/// Loss matching the dataset task.
Loss default_loss(const data::Dataset& ds);

// model.bin: magic "LPMD", u32 version, theta as (u64 rows, u64 cols, f64...).
void save_model(const LinearModel& model, std::ostream& out);
LinearModel load_model(std::istream& in);

}  // namespace lprff::trainer
