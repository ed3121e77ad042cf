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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snh/geo.hpp"
#include "snh/snh_model.hpp"

namespace snh {

inline constexpr std::size_t kEntropyGrid = 100;

// Shannon entropy (nats) of the occupancy distribution over a g x g
// equi-width partition of the region. Throws on an empty dataset.
double entropy(const PlanarDataset& d, std::size_t g = kEntropyGrid);

struct FeatureVector {
  double n = 0.0;
  double epsilon = 0.0;
  double inv_ne = 0.0;       // 1 / (n * epsilon)
  double inv_sqrt_ne = 0.0;  // 1 / sqrt(n * epsilon)
  double entropy = 0.0;

  static constexpr std::size_t kSize = 5;
  static constexpr std::array<std::string_view, kSize> kNames = {"n", "epsilon", "inv_ne",
                                                                 "inv_sqrt_ne", "entropy"};
  std::array<double, kSize> values() const noexcept {
    return {n, epsilon, inv_ne, inv_sqrt_ne, entropy};
  }
};

// `n` is the cardinality of the dataset being configured; the entropy comes
// from `d_star`, a public dataset over the same region.
FeatureVector features(const PlanarDataset& d_star, std::size_t n, double epsilon,
                       std::size_t g = kEntropyGrid);
FeatureVector features_with_entropy(double entropy_nats, std::size_t n, double epsilon);

struct ParamSample {
  FeatureVector features;
  double label = 0.0;  // best cell width in meters
};

// --- empirical label search ----------------------------------------------

// Geometric cell widths from side/fine_div up to side/coarse_div, ascending.
std::vector<double> geometric_rho_ladder(double side, std::size_t steps = 16,
                                         double fine_div = 512.0, double coarse_div = 8.0);

struct RhoSearchResult {
  double best_rho = 0.0;
  std::vector<double> candidates;     // ascending
  std::vector<double> median_errors;  // seed-averaged, aligned with candidates
};

// Index of the smallest error; the earliest index wins ties.
std::size_t lowest_error_index(std::span<const double> errors);

// Fits SNH on a public dataset at every candidate cell width and returns the
// one with the lowest seed-averaged median relative error on `eval_queries`.
// Ties go to the smaller width. Per-run seeds derive from (base.seed, rho,
// seed), so the result does not depend on candidate order.
RhoSearchResult empirical_best_rho(const PlanarDataset& d_public, double epsilon,
                                   std::span<const double> candidates,
                                   std::span<const RangeQuery> eval_queries,
                                   std::span<const std::uint64_t> seeds, const FitConfig& base,
                                   std::span<const RangeQuery> training_workload = {});

// --- tree ensemble --------------------------------------------------------

struct TreeConfig {
  std::size_t n_trees = 150;
  std::size_t max_depth = 7;
  // Features tried per split; 0 or >= 5 means all.
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
};

// Regression tree with extremely randomized splits.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  explicit RegressionTree(std::vector<Node> nodes);

  double predict(const std::array<double, FeatureVector::kSize>& x) const noexcept;
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::size_t depth() const noexcept;

 private:
  std::vector<Node> nodes_;
};

class TreeEnsemble {
 public:
  TreeEnsemble(std::vector<RegressionTree> trees, TreeConfig config);

  double predict(const FeatureVector& f) const noexcept;
  std::span<const RegressionTree> trees() const noexcept { return trees_; }
  const TreeConfig& config() const noexcept { return config_; }

 private:
  std::vector<RegressionTree> trees_;
  TreeConfig config_;
};

// Every tree sees the full sample set. At each node a random subset of
// features is drawn, each gets one threshold uniform between its node
// min and max, and the split with the largest variance reduction is kept.
TreeEnsemble fit_ensemble(std::span<const ParamSample> samples, const TreeConfig& config = {});

// Consumes no privacy budget: uses only n, epsilon and the public d_star.
double predict_rho(const TreeEnsemble& model, const Region& region, const PlanarDataset& d_star,
                   std::size_t n, double epsilon);

// Candidate sweep over public datasets x budgets.
struct TrainingSetConfig {
  std::vector<double> epsilons;
  std::size_t ladder_steps = 16;
  std::size_t eval_queries = 1000;
  std::vector<std::uint64_t> seeds = {0};
  FitConfig fit;
};

std::vector<ParamSample> build_training_set(std::span<const PlanarDataset> public_datasets,
                                            const TrainingSetConfig& cfg);

// --- file formats ---------------------------------------------------------

inline constexpr int kParamSelectFormatVersion = 1;

std::string ensemble_to_json(const TreeEnsemble& m);
TreeEnsemble ensemble_from_json(std::string_view text);
void save_ensemble(const TreeEnsemble& m, const std::string& path);
TreeEnsemble load_ensemble(const std::string& path);

// `n,epsilon,inv_ne,inv_sqrt_ne,entropy,rho_label`
void write_samples_csv(std::ostream& out, std::span<const ParamSample> samples);
std::vector<ParamSample> read_samples_csv(std::istream& in);

}  // namespace snh
