//
// Copyright 2026 The SNH Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace snh {

// Fully-connected network R^2 -> R with `depth` rectifier hidden layers of
// `width` units and a linear output. depth == 0 is a single linear layer.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
  };

  // All parameters zero.
  Mlp(std::size_t depth, std::size_t width);

  // Uniform fan-in scaling: hidden layers U(+-sqrt(6/fan_in)), output layer
  // U(+-sqrt(1/fan_in)); biases zero.
  static Mlp initialized(std::size_t depth, std::size_t width, std::uint64_t seed);

  std::size_t depth() const noexcept { return depth_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const Layer> layers() const noexcept { return layers_; }
  std::span<Layer> layers() noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;

  // Flattened parameters: per layer, row-major weight then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  bool all_finite() const noexcept;

  double forward(double x0, double x1) const noexcept;
  // inputs: 2 x B, one sample per column. Returns 1 x B.
  Eigen::RowVectorXd forward(const Eigen::Matrix<double, 2, Eigen::Dynamic>& inputs) const;

 private:
  std::size_t depth_;
  std::size_t width_;
  std::vector<Layer> layers_;
};

// Same shapes as Mlp::layers().
struct MlpGradient {
  std::vector<Mlp::Layer> layers;

  static MlpGradient zeros_like(const Mlp& m);
  std::vector<double> flatten() const;
};

// Training samples in normalized units.
struct Batch {
  Eigen::Matrix<double, 2, Eigen::Dynamic> inputs;
  Eigen::RowVectorXd labels;
  Eigen::RowVectorXd weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(labels.size()); }
};

struct LossAndGradient {
  double loss = 0.0;
  MlpGradient gradient;
};

// Weighted relative squared error
//   L = sum_i w_i / max(y_i, psi) * (f(x_i) - y_i)^2
// and its exact gradient by reverse-mode differentiation. Throws
// kTrainingDiverged on a non-finite loss.
LossAndGradient loss_and_grad(const Mlp& m, const Batch& batch, double psi);

// Loss only.
double weighted_loss(const Mlp& m, const Batch& batch, double psi);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(const Mlp& m, AdamConfig config);

  std::uint64_t step_count() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

  // One bias-corrected Adam update of `m` in place.
  void step(Mlp& m, const MlpGradient& g);

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Mlp::Layer> first_;
  std::vector<Mlp::Layer> second_;
};

// Fixed normalization applied around the network: inputs are planar corner
// coordinates divided by input_scale, outputs are counts divided by label_scale.
struct Normalization {
  double input_scale = 1.0;
  double label_scale = 1.0;

  double normalize_label(double y) const noexcept { return y / label_scale; }
  double denormalize_label(double y) const noexcept { return y * label_scale; }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct TrainConfig {
  std::size_t depth = 20;
  std::size_t width = 80;
  std::size_t epochs = 2000;
  // 0 selects full batch for up to kFullBatchLimit samples, else 1024.
  std::size_t batch_size = 0;
  // Hard cap on optimizer steps; 0 means unlimited.
  std::size_t max_steps = 0;
  // Return the parameters with the lowest full-set loss seen during training
  // rather than the last iterate.
  bool keep_best = true;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Loss floor in count units (normalized internally by label_scale).
  double psi = 1.0;
  Normalization normalization;

  static constexpr std::size_t kFullBatchLimit = 16384;
  static constexpr std::size_t kDefaultMinibatch = 1024;

  std::size_t effective_batch(std::size_t samples) const noexcept;
  void validate() const;
};

// One training sample in raw units: corner (meters), label (count), weight.
struct TrainingSample {
  double cx = 0.0;
  double cy = 0.0;
  double label = 0.0;
  double weight = 1.0;
};

Batch make_batch(std::span<const TrainingSample> samples, const Normalization& norm);

struct TrainResult {
  Mlp model;
  double first_epoch_loss = 0.0;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
};

// Minimizes the weighted loss over `samples` with Adam. Only the fixed noisy
// labels are used; no dataset access.
TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& cfg);

// --- serialization --------------------------------------------------------

inline constexpr int kMlpFormatVersion = 1;

std::string mlp_to_json(const Mlp& m, const Normalization& norm);
std::pair<Mlp, Normalization> mlp_from_json(std::string_view text);

// Little-endian binary: magic "SNHW", u32 version, u32 depth, u32 width,
// u32 activation tag, f64 input_scale, f64 label_scale, then per layer the
// row-major weight matrix and the bias as f64.
std::string mlp_to_binary(const Mlp& m, const Normalization& norm);
std::pair<Mlp, Normalization> mlp_from_binary(std::string_view bytes);

}  // namespace snh
