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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snh/augment.hpp"
#include "snh/dp_collect.hpp"
#include "snh/geo.hpp"
#include "snh/mlp.hpp"

namespace snh {

// How a model trained for size r* is extrapolated to a query of size r.
enum class ScalingMode {
  kArea,    // (r / r*)^2
  kLinear,  // r / r*
};

std::string_view scaling_mode_name(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view name);

struct LadderConfig {
  double l = 25.0;
  double u = 100.0;
  std::size_t k = 8;
};

struct FitConfig {
  double epsilon = 0.2;
  double rho = 0.0;  // cell width in meters
  LadderConfig ladder;
  // depth/width/epochs/optimizer settings. psi and normalization are filled
  // in by fit(): psi from n, label scale per size from its training labels.
  TrainConfig train;
  // Loss and metric floor as a fraction of n.
  double psi_fraction = 0.001;
  ScalingMode scaling = ScalingMode::kArea;
  std::uint64_t seed = 0;
  // Worker threads for the k independent trainings; 0 = hardware concurrency.
  std::size_t threads = 0;
};

struct SnhMeta {
  Region region;
  double rho;
  double epsilon;
  std::size_t n;
  double psi;
  std::uint64_t seed;
};

// Bank of k neural histograms, one per training size. Immutable once built;
// answer() is safe for concurrent callers.
class SnhModel {
 public:
  // `norms` holds one normalization per network; empty means input scale =
  // region side and label scale = n for every size.
  SnhModel(SnhMeta meta, SizeLadder ladder, std::vector<Mlp> models, ScalingMode scaling,
           std::vector<Normalization> norms = {});

  const SnhMeta& meta() const noexcept { return meta_; }
  const SizeLadder& ladder() const noexcept { return ladder_; }
  std::span<const Mlp> models() const noexcept { return models_; }
  ScalingMode scaling() const noexcept { return scaling_; }
  const Normalization& normalization(std::size_t i) const { return norms_.at(i); }

  // Scaled, denormalized estimate before the final clamp.
  double answer_unclamped(const RangeQuery& q) const;
  // max(0, answer_unclamped(q)).
  double answer(const RangeQuery& q) const;

 private:
  SnhMeta meta_;
  SizeLadder ladder_;
  std::vector<Mlp> models_;
  ScalingMode scaling_;
  std::vector<Normalization> norms_;
};

// Artifacts of one fit, kept for inspection and the bundle on disk.
struct FitReport {
  AccessAudit audit;
  std::vector<double> first_epoch_loss;
  std::vector<double> final_loss;
  std::size_t noise_draws = 0;
};

struct FitOutput {
  SnhModel model;
  NoisyHistogram histogram;
  FitReport report;
};

// Collect (the only budget expenditure and the only dataset access), then
// augment, weight and train k networks from the released histogram alone.
// An empty workload gives every training query weight 1.
FitOutput fit(AuditedDataset& data, const FitConfig& cfg, std::span<const RangeQuery> workload);

// Convenience overload that wraps `data` in a fresh audit.
FitOutput fit(const PlanarDataset& data, const FitConfig& cfg,
              std::span<const RangeQuery> workload);

// Label scale for one size's training set: max(psi, mean |label|). Keeps the
// network's targets near unit magnitude whatever n and the query size are.
double label_scale_for(std::span<const double> labels, double psi);

// Training half of the pipeline: everything after collection.
SnhModel train_from_histogram(const NoisyHistogram& h, const FitConfig& cfg,
                              std::span<const RangeQuery> workload, FitReport* report = nullptr);

namespace detail {

// fit() with a caller-supplied per-cell noise source.
FitOutput fit_with_noise(AuditedDataset& data, const FitConfig& cfg,
                         std::span<const RangeQuery> workload,
                         const std::function<double()>& noise);

}  // namespace detail

// --- model bundle ---------------------------------------------------------

inline constexpr int kBundleFormatVersion = 1;

enum class WeightFormat { kBinary, kJson };

// Directory with manifest.json, one weight file per size, histogram.json and
// audit.json.
void save_bundle(const FitOutput& fit, const std::string& dir,
                 WeightFormat format = WeightFormat::kBinary);
void save_model(const SnhModel& m, const std::string& dir,
                WeightFormat format = WeightFormat::kBinary);
SnhModel load_model(const std::string& dir);

}  // namespace snh
