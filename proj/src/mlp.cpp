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

#include "snh/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "json_io.hpp"
#include "snh/error.hpp"
#include "snh/random.hpp"

namespace snh {

static_assert(std::endian::native == std::endian::little,
              "binary weight format assumes a little-endian host");

using Inputs = Eigen::Matrix<double, 2, Eigen::Dynamic>;

Mlp::Mlp(std::size_t depth, std::size_t width) : depth_(depth), width_(width) {
  if (depth > 0 && width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "hidden layers need a positive width");
  }
  std::size_t in = 2;
  for (std::size_t l = 0; l < depth; ++l) {
    layers_.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(width),
                                             static_cast<Eigen::Index>(in)),
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width))});
    in = width;
  }
  layers_.push_back(
      {Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(in)), Eigen::VectorXd::Zero(1)});
}

Mlp Mlp::initialized(std::size_t depth, std::size_t width, std::uint64_t seed) {
  Mlp m(depth, width);
  Rng rng(seed);
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    auto& w = m.layers_[l].weight;
    const auto fan_in = static_cast<double>(w.cols());
    const bool output = (l + 1 == m.layers_.size());
    const double bound = output ? std::sqrt(1.0 / fan_in) : std::sqrt(6.0 / fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -bound, bound);
    }
  }
  return m;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

namespace {

void append_layers(std::span<const Mlp::Layer> layers, std::vector<double>& out) {
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) out.push_back(layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
}

}  // namespace

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  append_layers(layers_, out);
  return out;
}

void Mlp::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kInvalidArgument, "parameter vector has the wrong length");
  }
  std::size_t i = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = flat[i++];
  }
}

bool Mlp::all_finite() const noexcept {
  return std::all_of(layers_.begin(), layers_.end(), [](const Layer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

double Mlp::forward(double x0, double x1) const noexcept {
  Eigen::VectorXd a(2);
  a << x0, x1;
  Eigen::VectorXd z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    z.noalias() = layers_[l].weight * a;
    z += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = z;
    }
  }
  return a(0);
}

namespace {

// Activation buffers reused across steps.
class Workspace {
 public:
  // Forward pass keeping every layer output; returns the 1 x B prediction.
  const Eigen::MatrixXd& forward(const Mlp& m, const Inputs& x) {
    const auto layers = m.layers();
    acts_.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& out = acts_[l];
      if (l == 0) {
        out.noalias() = layers[l].weight * x;
      } else {
        out.noalias() = layers[l].weight * acts_[l - 1];
      }
      out.colwise() += layers[l].bias;
      if (l + 1 < layers.size()) out = out.cwiseMax(0.0);
    }
    return acts_.back();
  }

  // Reverse pass from dL/d(output) (1 x B), after forward() on the same inputs.
  void backward(const Mlp& m, const Inputs& x, const Eigen::MatrixXd& d_out, MlpGradient& g) {
    const auto layers = m.layers();
    delta_ = d_out;
    for (std::size_t l = layers.size(); l-- > 0;) {
      auto& gl = g.layers[l];
      if (l == 0) {
        gl.weight.noalias() = delta_ * x.transpose();
      } else {
        gl.weight.noalias() = delta_ * acts_[l - 1].transpose();
      }
      gl.bias = delta_.rowwise().sum();
      if (l > 0) {
        back_.noalias() = layers[l].weight.transpose() * delta_;
        delta_ = (acts_[l - 1].array() > 0.0).select(back_.array(), 0.0).matrix();
      }
    }
  }

 private:
  std::vector<Eigen::MatrixXd> acts_;
  Eigen::MatrixXd delta_;
  Eigen::MatrixXd back_;
};

struct Residual {
  double loss;
  Eigen::MatrixXd d_out;
};

Residual weighted_residual(const Eigen::MatrixXd& pred, const Batch& b, double psi) {
  const Eigen::ArrayXXd coef = b.weights.array() / b.labels.array().max(psi);
  const Eigen::ArrayXXd diff = pred.array() - b.labels.array();
  const double loss = (coef * diff.square()).sum();
  return {loss, (2.0 * coef * diff).matrix()};
}

void check_psi(double psi) {
  if (!(psi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "psi must be positive");
}

}  // namespace

Eigen::RowVectorXd Mlp::forward(const Inputs& inputs) const {
  Workspace ws;
  return ws.forward(*this, inputs);
}

MlpGradient MlpGradient::zeros_like(const Mlp& m) {
  MlpGradient g;
  for (const auto& layer : m.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

std::vector<double> MlpGradient::flatten() const {
  std::vector<double> out;
  append_layers(layers, out);
  return out;
}

LossAndGradient loss_and_grad(const Mlp& m, const Batch& batch, double psi) {
  check_psi(psi);
  Workspace ws;
  const auto& pred = ws.forward(m, batch.inputs);
  auto res = weighted_residual(pred, batch, psi);
  if (!std::isfinite(res.loss)) {
    throw Error(ErrorCode::kTrainingDiverged, "non-finite loss on batch of " +
                                                  std::to_string(batch.size()) + " samples");
  }
  LossAndGradient out{res.loss, MlpGradient::zeros_like(m)};
  ws.backward(m, batch.inputs, res.d_out, out.gradient);
  return out;
}

double weighted_loss(const Mlp& m, const Batch& batch, double psi) {
  check_psi(psi);
  Workspace ws;
  return weighted_residual(ws.forward(m, batch.inputs), batch, psi).loss;
}

AdamState::AdamState(const Mlp& m, AdamConfig config) : config_(config) {
  first_ = MlpGradient::zeros_like(m).layers;
  second_ = first_;
}

void AdamState::step(Mlp& m, const MlpGradient& g) {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
    mom.array() = b1 * mom.array() + (1.0 - b1) * grad.array();
    vel.array() = b2 * vel.array() + (1.0 - b2) * grad.array().square();
    param.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + eps);
  };
  auto layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, first_[l].weight, second_[l].weight, g.layers[l].weight);
    update(layers[l].bias, first_[l].bias, second_[l].bias, g.layers[l].bias);
  }
}

std::size_t TrainConfig::effective_batch(std::size_t samples) const noexcept {
  if (batch_size > 0) return std::min(batch_size, samples);
  return samples <= kFullBatchLimit ? samples : kDefaultMinibatch;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(psi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "psi must be positive");
  if (depth > 0 && width == 0) throw Error(ErrorCode::kInvalidArgument, "width must be >= 1");
  if (!(adam.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  if (!(normalization.input_scale > 0.0) || !(normalization.label_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "normalization scales must be positive");
  }
}

Batch make_batch(std::span<const TrainingSample> samples, const Normalization& norm) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(samples.size());
  b.inputs.resize(2, n);
  b.labels.resize(n);
  b.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    b.inputs(0, i) = s.cx / norm.input_scale;
    b.inputs(1, i) = s.cy / norm.input_scale;
    b.labels(i) = norm.normalize_label(s.label);
    b.weights(i) = s.weight;
  }
  return b;
}

namespace {

std::string describe(const TrainConfig& cfg, std::size_t samples) {
  std::ostringstream s;
  s << "depth=" << cfg.depth << " width=" << cfg.width << " epochs=" << cfg.epochs
    << " batch=" << cfg.effective_batch(samples) << " lr=" << cfg.adam.learning_rate
    << " seed=" << cfg.seed << " psi=" << cfg.psi << " samples=" << samples;
  return s.str();
}

void gather(const Batch& full, std::span<const std::size_t> idx, Batch& out) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.inputs.resize(2, n);
  out.labels.resize(n);
  out.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]);
    out.inputs.col(i) = full.inputs.col(j);
    out.labels(i) = full.labels(j);
    out.weights(i) = full.weights(j);
  }
}

}  // namespace

TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no training samples");

  const Batch full = make_batch(samples, cfg.normalization);
  const double psi = cfg.psi / cfg.normalization.label_scale;
  const std::size_t batch = cfg.effective_batch(samples.size());

  TrainResult result{Mlp::initialized(cfg.depth, cfg.width, derive_seed(cfg.seed, "init")), 0.0,
                     0.0, 0, 0};
  Mlp& model = result.model;
  AdamState adam(model, cfg.adam);
  MlpGradient grad = MlpGradient::zeros_like(model);
  Workspace ws;
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Batch mini;

  auto full_loss = [&] {
    const double loss = weighted_residual(ws.forward(model, full.inputs), full, psi).loss;
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kTrainingDiverged,
                  "non-finite training loss (" + describe(cfg, samples.size()) + ")");
    }
    return loss;
  };

  // Lowest full-set loss seen so far and the parameters that produced it.
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Mlp::Layer> best_layers;
  auto remember = [&](double loss) {
    if (cfg.keep_best && loss < best_loss) {
      best_loss = loss;
      best_layers.assign(model.layers().begin(), model.layers().end());
    }
  };

  auto step_on = [&](const Batch& b, bool is_full) {
    const auto& pred = ws.forward(model, b.inputs);
    auto res = weighted_residual(pred, b, psi);
    if (!std::isfinite(res.loss)) {
      throw Error(ErrorCode::kTrainingDiverged,
                  "non-finite loss at step " + std::to_string(result.steps) + " (" +
                      describe(cfg, samples.size()) + ")");
    }
    // A full-batch forward pass is the full-set loss of the pre-step parameters.
    if (is_full) remember(res.loss);
    ws.backward(model, b.inputs, res.d_out, grad);
    adam.step(model, grad);
    ++result.steps;
  };

  const bool capped = cfg.max_steps > 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch == samples.size()) {
      step_on(full, true);
    } else {
      for (std::size_t i = samples.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);
      }
      for (std::size_t start = 0; start < samples.size(); start += batch) {
        const std::size_t len = std::min(batch, samples.size() - start);
        gather(full, std::span(order).subspan(start, len), mini);
        step_on(mini, false);
        if (capped && result.steps >= cfg.max_steps) break;
      }
    }
    ++result.epochs_run;
    if (epoch == 0) result.first_epoch_loss = full_loss();
    if (batch != samples.size() && cfg.keep_best) remember(full_loss());
    if (capped && result.steps >= cfg.max_steps) break;
  }
  result.final_loss = full_loss();
  if (best_loss < result.final_loss) {
    std::copy(best_layers.begin(), best_layers.end(), model.layers().begin());
    result.final_loss = best_loss;
  }
  if (!model.all_finite()) {
    throw Error(ErrorCode::kTrainingDiverged,
                "non-finite parameters after training (" + describe(cfg, samples.size()) + ")");
  }
  return result;
}

// --- serialization --------------------------------------------------------

std::string mlp_to_json(const Mlp& m, const Normalization& norm) {
  internal::json j;
  j["version"] = kMlpFormatVersion;
  j["depth"] = m.depth();
  j["width"] = m.width();
  j["activation"] = "relu";
  j["normalization"] = {{"input_scale", norm.input_scale}, {"label_scale", norm.label_scale}};
  auto layers = internal::json::array();
  for (const auto& layer : m.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weight", w},
                      {"bias", b}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

std::pair<Mlp, Normalization> mlp_from_json(std::string_view text) {
  auto j = internal::parse_json_document(text, "model weights");
  internal::check_version(j, kMlpFormatVersion, "model weights");
  return internal::guarded_parse("model weights", [&] {
    if (j.at("activation").get<std::string>() != "relu") {
      throw Error(ErrorCode::kCorruptFile, "model weights: unknown activation");
    }
    Mlp m(j.at("depth").get<std::size_t>(), j.at("width").get<std::size_t>());
    const auto& layers = j.at("layers");
    if (layers.size() != m.layers().size()) {
      throw Error(ErrorCode::kCorruptFile, "model weights: layer count mismatch");
    }
    std::vector<double> flat;
    for (const auto& layer : layers) {
      auto w = layer.at("weight").get<std::vector<double>>();
      auto b = layer.at("bias").get<std::vector<double>>();
      flat.insert(flat.end(), w.begin(), w.end());
      flat.insert(flat.end(), b.begin(), b.end());
    }
    if (flat.size() != m.parameter_count()) {
      throw Error(ErrorCode::kCorruptFile, "model weights: parameter count mismatch");
    }
    m.set_parameters(flat);
    Normalization norm{j.at("normalization").at("input_scale").get<double>(),
                       j.at("normalization").at("label_scale").get<double>()};
    return std::pair{std::move(m), norm};
  });
}

namespace {

constexpr char kMagic[4] = {'S', 'N', 'H', 'W'};
constexpr std::uint32_t kReluTag = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw Error(ErrorCode::kCorruptFile, "model weights: truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

}  // namespace

std::string mlp_to_binary(const Mlp& m, const Normalization& norm) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kMlpFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.depth()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.width()));
  put<std::uint32_t>(out, kReluTag);
  put<double>(out, norm.input_scale);
  put<double>(out, norm.label_scale);
  for (double v : m.parameters()) put<double>(out, v);
  return out;
}

std::pair<Mlp, Normalization> mlp_from_binary(std::string_view in) {
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kCorruptFile, "model weights: bad magic");
  }
  in.remove_prefix(sizeof(kMagic));
  const auto version = take<std::uint32_t>(in);
  if (version != kMlpFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "model weights: version " + std::to_string(version) + ", expected " +
                    std::to_string(kMlpFormatVersion));
  }
  const auto depth = take<std::uint32_t>(in);
  const auto width = take<std::uint32_t>(in);
  if (take<std::uint32_t>(in) != kReluTag) {
    throw Error(ErrorCode::kCorruptFile, "model weights: unknown activation");
  }
  Normalization norm;
  norm.input_scale = take<double>(in);
  norm.label_scale = take<double>(in);
  if (depth > 4096 || width > (1U << 16)) {
    throw Error(ErrorCode::kCorruptFile, "model weights: implausible shape");
  }
  Mlp m(depth, width);
  if (in.size() != m.parameter_count() * sizeof(double)) {
    throw Error(ErrorCode::kCorruptFile, "model weights: payload size mismatch");
  }
  std::vector<double> flat(m.parameter_count());
  std::memcpy(flat.data(), in.data(), in.size());
  m.set_parameters(flat);
  return {std::move(m), norm};
}

}  // namespace snh
