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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "snh/error.hpp"
#include "snh/eval.hpp"
#include "snh/paramselect.hpp"
#include "test_support.hpp"

namespace snh {
namespace {

using testing::square;

TEST(Entropy, Examples) {
  PlanarDataset one(square(100), std::vector<PlanarPoint>(50, {3, 3}));
  EXPECT_DOUBLE_EQ(entropy(one), 0.0);
  PlanarDataset four(square(100), {{10, 10}, {60, 10}, {10, 60}, {60, 60}});
  EXPECT_NEAR(entropy(four, 2), std::log(4.0), 1e-12);
  EXPECT_NEAR(entropy(four, 2), 1.3863, 1e-4);
  PlanarDataset two(square(100), {{10, 10}, {20, 20}, {30, 30}, {60, 10}});
  EXPECT_NEAR(entropy(two, 2), -0.75 * std::log(0.75) - 0.25 * std::log(0.25), 1e-12);
  EXPECT_NEAR(entropy(two, 2), 0.5623, 1e-4);
}

TEST(Entropy, BoundedByLogCells) {
  Rng g(1);
  for (int t = 0; t < 20; ++t) {
    auto d = gen_uniform(1 + uniform_index(g, 5000), square(uniform(g, 10, 1000)), g());
    const double h = entropy(d, 10);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(100.0) + 1e-12);
  }
}

TEST(Features, Arithmetic) {
  auto f = features_with_entropy(2.0, 100000, 0.2);
  EXPECT_DOUBLE_EQ(f.inv_ne, 5.0e-5);
  EXPECT_NEAR(f.inv_sqrt_ne, 7.071e-3, 1e-6);
  EXPECT_EQ(f.n, 100000);
  EXPECT_EQ(f.entropy, 2.0);
  EXPECT_THROW(features_with_entropy(1, 0, 0.2), Error);
}

TEST(Features, EpsilonScaleExchangeability) {
  auto a = features_with_entropy(1, 100000, 0.2), b = features_with_entropy(1, 50000, 0.4);
  EXPECT_DOUBLE_EQ(a.inv_ne, b.inv_ne);
  EXPECT_DOUBLE_EQ(a.inv_sqrt_ne, b.inv_sqrt_ne);
}

TEST(Features, DeterministicEntropy) {
  auto d = gen_uniform(3000, square(500), 2);
  EXPECT_EQ(features(d, 10, 0.1).entropy, features(d, 10, 0.1).entropy);
  EXPECT_EQ(features(d, 10, 0.1).entropy, entropy(d));
}

TEST(RhoLadder, Geometric) {
  auto l = geometric_rho_ladder(1024);
  ASSERT_EQ(l.size(), 16u);
  EXPECT_DOUBLE_EQ(l.front(), 2);
  EXPECT_DOUBLE_EQ(l.back(), 128);
  for (std::size_t i = 2; i < l.size(); ++i) {
    EXPECT_NEAR(l[i] / l[i - 1], l[1] / l[0], 1e-12);
  }
}

TEST(LowestError, TiesGoFirst) {
  std::vector<double> e = {0.3, 0.2, 0.2, 0.5};
  EXPECT_EQ(lowest_error_index(e), 1u);
  std::vector<double> one = {7};
  EXPECT_EQ(lowest_error_index(one), 0u);
}

FitConfig tiny_fit() {
  FitConfig cfg;
  cfg.ladder = {25, 100, 1};
  cfg.train.depth = 2;
  cfg.train.width = 8;
  cfg.train.epochs = 30;
  cfg.train.max_steps = 30;
  cfg.threads = 1;
  return cfg;
}

TEST(EmpiricalBestRho, SingleCandidate) {
  auto d = gen_uniform(2000, square(400), 1);
  auto w = gen_workload(d.region(), 100, 25, 100, 1);
  std::vector<double> c = {40};
  std::vector<std::uint64_t> seeds = {0};
  auto r = empirical_best_rho(d, 0.5, c, w.queries, seeds, tiny_fit());
  EXPECT_EQ(r.best_rho, 40);
  EXPECT_EQ(r.median_errors.size(), 1u);
}

TEST(EmpiricalBestRho, CandidateOrderIrrelevant) {
  auto d = gen_uniform(2000, square(400), 1);
  auto w = gen_workload(d.region(), 100, 25, 100, 1);
  std::vector<double> a = {20, 40, 80}, b = {80, 20, 40, 20};
  std::vector<std::uint64_t> seeds = {0, 1};
  auto ra = empirical_best_rho(d, 0.5, a, w.queries, seeds, tiny_fit());
  auto rb = empirical_best_rho(d, 0.5, b, w.queries, seeds, tiny_fit());
  EXPECT_EQ(ra.candidates, rb.candidates);
  EXPECT_EQ(ra.median_errors, rb.median_errors);
  EXPECT_EQ(ra.best_rho, rb.best_rho);
}

// Dense uniform data and a generous budget: noise is small relative to the
// sampling variation fine cells capture, so the search lands on the fine side.
TEST(EmpiricalBestRho, LargeEpsilonPrefersFineCells) {
  auto d = gen_uniform(50000, square(500), 3);
  auto w = gen_workload(d.region(), 500, 25, 100, 3);
  std::vector<double> c = {5, 10, 20, 40, 80, 160};
  std::vector<std::uint64_t> seeds = {0};
  FitConfig cfg;
  cfg.ladder = {25, 100, 2};
  cfg.train.depth = 3;
  cfg.train.width = 32;
  cfg.train.epochs = 300;
  cfg.train.max_steps = 600;
  auto r = empirical_best_rho(d, 10.0, c, w.queries, seeds, cfg);
  EXPECT_LE(r.best_rho, c[(c.size() - 1) / 2]);
}

std::vector<ParamSample> synthetic_samples(std::size_t count, std::uint64_t seed) {
  Rng g(seed);
  std::vector<ParamSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = static_cast<std::size_t>(uniform(g, 1e3, 1e6));
    const double eps = uniform(g, 0.05, 0.8), h = uniform(g, 4, 9);
    auto f = features_with_entropy(h, n, eps);
    const double label = 2000 * f.inv_sqrt_ne * (1 + 0.1 * (h - 4)) + uniform(g, -0.5, 0.5);
    out.push_back({f, label});
  }
  return out;
}

double mae(const TreeEnsemble& m, std::span<const ParamSample> s) {
  double e = 0;
  for (const auto& x : s) e += std::abs(m.predict(x.features) - x.label);
  return e / static_cast<double>(s.size());
}

TEST(Ensemble, ConstantLabels) {
  auto s = synthetic_samples(30, 1);
  for (auto& x : s) x.label = 12.5;
  auto m = fit_ensemble(s, {20, 7, 0, 2, 1});
  for (const auto& x : synthetic_samples(50, 2)) EXPECT_DOUBLE_EQ(m.predict(x.features), 12.5);
}

TEST(Ensemble, PredictionsWithinLabelRange) {
  auto s = synthetic_samples(60, 3);
  auto [lo, hi] = std::minmax_element(s.begin(), s.end(), [](auto& a, auto& b) {
    return a.label < b.label;
  });
  auto m = fit_ensemble(s);
  Rng g(4);
  for (int i = 0; i < 500; ++i) {
    FeatureVector f{uniform(g, -1e7, 1e7), uniform(g, -5, 5), uniform(g, -1, 1),
                    uniform(g, -1, 1), uniform(g, -10, 20)};
    const double p = m.predict(f);
    EXPECT_GE(p, lo->label);
    EXPECT_LE(p, hi->label);
  }
  for (const auto& t : m.trees()) EXPECT_LE(t.depth(), 7u);
  EXPECT_EQ(m.trees().size(), 150u);
}

TEST(Ensemble, BeatsConstantMeanOn45Samples) {
  auto s = synthetic_samples(45, 5);
  const double mean =
      std::accumulate(s.begin(), s.end(), 0.0, [](double a, auto& x) { return a + x.label; }) / 45;
  double base = 0;
  for (const auto& x : s) base += std::abs(x.label - mean);
  base /= 45;
  auto m = fit_ensemble(s);
  EXPECT_LT(mae(m, s), base);
}

TEST(Ensemble, DeterministicUnderSeed) {
  auto s = synthetic_samples(40, 6);
  TreeConfig cfg;
  cfg.seed = 9;
  auto a = fit_ensemble(s, cfg), b = fit_ensemble(s, cfg);
  EXPECT_EQ(ensemble_to_json(a), ensemble_to_json(b));
  cfg.seed = 10;
  EXPECT_NE(ensemble_to_json(a), ensemble_to_json(fit_ensemble(s, cfg)));
}

TEST(Ensemble, JsonRoundTrip) {
  auto s = synthetic_samples(40, 7);
  auto m = fit_ensemble(s, {25, 5, 3, 2, 4});
  auto back = ensemble_from_json(ensemble_to_json(m));
  EXPECT_EQ(back.trees().size(), 25u);
  EXPECT_EQ(back.config().max_features, 3u);
  for (const auto& x : synthetic_samples(100, 8)) {
    EXPECT_EQ(back.predict(x.features), m.predict(x.features));
  }
  EXPECT_THROW(ensemble_from_json("[]"), Error);
}

TEST(Ensemble, RejectsEmptyOrNonPositiveLabels) {
  std::vector<ParamSample> none;
  EXPECT_THROW(fit_ensemble(none), Error);
  auto s = synthetic_samples(5, 1);
  s[2].label = 0;
  EXPECT_THROW(fit_ensemble(s), Error);
}

TEST(PredictRho, RegionMustMatch) {
  auto s = synthetic_samples(20, 1);
  for (auto& x : s) x.label = 33;
  auto m = fit_ensemble(s, {10, 3, 0, 2, 0});
  auto d = gen_uniform(1000, square(500), 1);
  EXPECT_EQ(predict_rho(m, d.region(), d, 5000, 0.2), 33);
  EXPECT_EQ(predict_rho(m, d.region(), d, 5000, 0.2), predict_rho(m, d.region(), d, 5000, 0.2));
  EXPECT_THROW(predict_rho(m, square(600), d, 5000, 0.2), Error);
}

TEST(SamplesCsv, RoundTrip) {
  auto s = synthetic_samples(10, 2);
  std::stringstream ss;
  write_samples_csv(ss, s);
  auto back = read_samples_csv(ss);
  ASSERT_EQ(back.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(back[i].label, s[i].label);
    EXPECT_EQ(back[i].features.values(), s[i].features.values());
  }
}

TEST(TrainingSet, OneSamplePerDatasetAndEpsilon) {
  std::vector<PlanarDataset> ds = {gen_uniform(1500, square(300), 1),
                                   gen_uniform(800, square(300), 2)};
  TrainingSetConfig cfg;
  cfg.epsilons = {0.1, 0.5};
  cfg.ladder_steps = 3;
  cfg.eval_queries = 50;
  cfg.fit = tiny_fit();
  auto s = build_training_set(ds, cfg);
  ASSERT_EQ(s.size(), 4u);
  for (const auto& x : s) EXPECT_GT(x.label, 0);
}

}  // namespace
}  // namespace snh
