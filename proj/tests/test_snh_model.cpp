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

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "snh/error.hpp"
#include "snh/eval.hpp"
#include "snh/snh_model.hpp"
#include "test_support.hpp"

namespace snh {
namespace {

using testing::square;
using testing::TempDir;

// One-size model whose network outputs a known affine function of the
// normalized corner.
SnhModel affine_model(std::vector<double> sizes_lkj, ScalingMode mode, double a, double b,
                      double c) {
  const double l = sizes_lkj[0], u = sizes_lkj[1];
  const auto k = static_cast<std::size_t>(sizes_lkj[2]);
  std::vector<Mlp> nets;
  for (std::size_t i = 0; i < k; ++i) {
    Mlp m(0, 0);
    std::vector<double> p = {a, b, c + static_cast<double>(i)};
    m.set_parameters(p);
    nets.push_back(std::move(m));
  }
  SnhMeta meta{square(1000), 50, 0.2, 100, 0.1, 0};
  return SnhModel(meta, SizeLadder(l, u, k), std::move(nets), mode);
}

TEST(FitConfig, Defaults) {
  FitConfig cfg;
  EXPECT_EQ(cfg.epsilon, 0.2);
  EXPECT_EQ(cfg.ladder.l, 25);
  EXPECT_EQ(cfg.ladder.u, 100);
  EXPECT_EQ(cfg.ladder.k, 8u);
  EXPECT_EQ(cfg.train.depth, 20u);
  EXPECT_EQ(cfg.train.width, 80u);
  EXPECT_EQ(cfg.train.adam.learning_rate, 1e-3);
  EXPECT_EQ(cfg.psi_fraction, 0.001);
  EXPECT_EQ(cfg.scaling, ScalingMode::kArea);
}

TEST(ScalingMode, Names) {
  EXPECT_EQ(parse_scaling_mode("area"), ScalingMode::kArea);
  EXPECT_EQ(parse_scaling_mode("linear"), ScalingMode::kLinear);
  EXPECT_EQ(scaling_mode_name(ScalingMode::kLinear), "linear");
  EXPECT_THROW(parse_scaling_mode("cubic"), Error);
}

TEST(Answer, SizeOnLadderHasUnitScale) {
  auto m = affine_model({50, 50, 1}, ScalingMode::kArea, 0.1, 0.2, 0.05);
  RangeQuery q({500, 250}, 50);
  const double raw = m.models()[0].forward(0.5, 0.25);
  EXPECT_DOUBLE_EQ(m.answer(q), std::max(0.0, raw * 100));
}

TEST(Answer, AreaScalingQuadruplesForDoubleSize) {
  auto m = affine_model({50, 50, 1}, ScalingMode::kArea, 0.1, 0.2, 0.05);
  RangeQuery base({300, 700}, 50), twice({300, 700}, 100);
  EXPECT_DOUBLE_EQ(m.answer_unclamped(twice), 4 * m.answer_unclamped(base));
}

TEST(Answer, LinearScalingDoubles) {
  auto m = affine_model({50, 50, 1}, ScalingMode::kLinear, 0.1, 0.2, 0.05);
  RangeQuery base({300, 700}, 50), twice({300, 700}, 100);
  EXPECT_DOUBLE_EQ(m.answer_unclamped(twice), 2 * m.answer_unclamped(base));
}

TEST(Answer, TieSelectsSmallerSize) {
  // Ladder {35, 85}; network i has bias c + i so the choice is observable.
  auto m = affine_model({10, 110, 2}, ScalingMode::kArea, 0, 0, 1);
  RangeQuery q({0, 0}, 60);
  EXPECT_DOUBLE_EQ(m.answer_unclamped(q), (60.0 / 35) * (60.0 / 35) * 1 * 100);
}

TEST(Answer, ClampsNegative) {
  auto m = affine_model({50, 50, 1}, ScalingMode::kArea, 0, 0, -3);
  RangeQuery q({10, 10}, 50);
  EXPECT_LT(m.answer_unclamped(q), 0);
  EXPECT_EQ(m.answer(q), 0.0);
}

TEST(Answer, ScalingPropertyRandomized) {
  Rng g(1);
  auto m = affine_model({20, 80, 3}, ScalingMode::kArea, 0.3, -0.2, 0.4);
  for (int i = 0; i < 200; ++i) {
    const std::size_t s = uniform_index(g, 3);
    const double r = m.ladder().size(s);
    PlanarPoint c{uniform(g, 0, 1000), uniform(g, 0, 1000)};
    const double r2 = r * uniform(g, 0.9, 1.1);
    const auto j = m.ladder().nearest(r2);
    const double base = m.answer_unclamped(RangeQuery(c, m.ladder().size(j)));
    const double f = r2 / m.ladder().size(j);
    EXPECT_NEAR(m.answer_unclamped(RangeQuery(c, r2)), f * f * base, 1e-9 * std::abs(base) + 1e-12);
  }
}

FitConfig small_config(double rho, std::size_t k) {
  FitConfig cfg;
  cfg.rho = rho;
  cfg.ladder = {25, 100, k};
  cfg.train.depth = 3;
  cfg.train.width = 16;
  cfg.train.epochs = 60;
  cfg.seed = 77;
  cfg.threads = 2;
  return cfg;
}

TEST(Fit, SameSeedSameModel) {
  auto d = gen_uniform(2000, square(400), 1);
  auto cfg = small_config(40, 2);
  auto w = gen_workload(d.region(), 100, 25, 100, 2);
  auto a = fit(d, cfg, w.queries), b = fit(d, cfg, w.queries);
  TempDir ta("fa"), tb("fb");
  save_model(a.model, ta.path().string());
  save_model(b.model, tb.path().string());
  for (const auto& e : std::filesystem::directory_iterator(ta.path())) {
    std::ifstream x(e.path(), std::ios::binary), y(tb.path() / e.path().filename(),
                                                    std::ios::binary);
    std::string sx((std::istreambuf_iterator<char>(x)), {}),
        sy((std::istreambuf_iterator<char>(y)), {});
    EXPECT_EQ(sx, sy) << e.path();
  }
}

TEST(Fit, ThreadCountDoesNotChangeResult) {
  auto d = gen_uniform(1500, square(300), 5);
  auto cfg = small_config(30, 3);
  auto a = fit(d, cfg, {});
  cfg.threads = 1;
  auto b = fit(d, cfg, {});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.model.models()[i].parameters(), b.model.models()[i].parameters());
  }
}

TEST(Fit, OneModelPerLadderSizeAndMeta) {
  auto d = gen_uniform(1000, square(300), 5);
  auto cfg = small_config(30, 3);
  auto out = fit(d, cfg, {});
  EXPECT_EQ(out.model.models().size(), 3u);
  EXPECT_EQ(out.model.meta().n, 1000u);
  EXPECT_EQ(out.model.meta().rho, 30);
  EXPECT_DOUBLE_EQ(out.model.meta().psi, 1.0);
  EXPECT_EQ(out.report.final_loss.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out.model.normalization(i).input_scale, 300);
    const auto aug = augment(out.histogram, out.model.ladder());
    double mean = 0;
    for (double y : aug.labels(i)) mean += std::abs(y);
    mean /= static_cast<double>(aug.labels(i).size());
    EXPECT_DOUBLE_EQ(out.model.normalization(i).label_scale, std::max(1.0, mean));
  }
}

TEST(LabelScale, MeanAbsoluteLabelFlooredAtPsi) {
  const std::vector<double> labels = {4, -2, 0, 6};
  EXPECT_DOUBLE_EQ(label_scale_for(labels, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(label_scale_for(labels, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(label_scale_for({}, 0.5), 0.5);
}

TEST(Fit, InvalidConfigRejectedBeforeCollection) {
  auto d = gen_uniform(100, square(300), 5);
  for (int which = 0; which < 4; ++which) {
    auto cfg = small_config(30, 2);
    if (which == 0) cfg.rho = 0;
    if (which == 1) cfg.rho = 400;
    if (which == 2) cfg.epsilon = -1;
    if (which == 3) cfg.ladder.k = 0;
    AuditedDataset a(d);
    EXPECT_THROW(fit(a, cfg, {}), Error);
    EXPECT_EQ(a.audit().point_reads, 0u) << which;
  }
}

// No noise, uniform data, a single network for size R[0]: answers at
// training corners track the true counts.
TEST(Fit, NoNoiseSingleSizeTracksTruth) {
  const double side = 500;
  auto d = gen_uniform(100000, square(side), 9);
  AuditedDataset a(d);
  FitConfig cfg;
  cfg.rho = 25;
  cfg.ladder = {25, 100, 1};
  cfg.train.depth = 4;
  cfg.train.width = 32;
  cfg.train.epochs = 4000;
  auto out = testing::fit_exact(a, cfg);
  const double r0 = out.model.ladder().size(0);
  const auto& grid = out.histogram.grid();
  std::size_t checked = 0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    RangeQuery q(grid.corner(c), r0);
    if (q.corner().x + r0 > side || q.corner().y + r0 > side) continue;
    const double truth = static_cast<double>(true_count(d, q));
    EXPECT_NEAR(out.model.answer(q), truth, 0.10 * truth) << "cell " << c;
    ++checked;
  }
  EXPECT_GT(checked, 250u);
}

TEST(Bundle, SaveLoadAnswersIdentical) {
  auto d = gen_uniform(3000, square(600), 4);
  auto out = fit(d, small_config(60, 3), {});
  auto qs = gen_workload(d.region(), 1000, 25, 100, 8).queries;
  for (auto fmt : {WeightFormat::kBinary, WeightFormat::kJson}) {
    TempDir t("bundle");
    save_bundle(out, t.path().string(), fmt);
    EXPECT_TRUE(std::filesystem::exists(t.path() / "histogram.json"));
    EXPECT_TRUE(std::filesystem::exists(t.path() / "audit.json"));
    auto back = load_model(t.path().string());
    EXPECT_EQ(back.meta().rho, 60);
    EXPECT_EQ(back.ladder().k(), 3u);
    for (const auto& q : qs) ASSERT_EQ(back.answer(q), out.model.answer(q));
  }
}

TEST(Bundle, ManifestListsOneFilePerSize) {
  auto d = gen_uniform(500, square(300), 4);
  auto out = fit(d, small_config(50, 4), {});
  TempDir t("manifest");
  save_bundle(out, t.path().string());
  std::ifstream in(t.path() / "manifest.json");
  auto j = nlohmann::json::parse(in);
  ASSERT_EQ(j["models"].size(), 4u);
  for (const auto& m : j["models"]) {
    EXPECT_TRUE(std::filesystem::exists(t.path() / m["file"].get<std::string>()));
  }
}

TEST(Bundle, VersionMismatchAndMissing) {
  auto d = gen_uniform(500, square(300), 4);
  auto out = fit(d, small_config(50, 1), {});
  TempDir t("ver");
  save_bundle(out, t.path().string());
  const auto mp = t.path() / "manifest.json";
  nlohmann::json j;
  {
    std::ifstream in(mp);
    j = nlohmann::json::parse(in);
  }
  j["version"] = 99;
  {
    std::ofstream o(mp);
    o << j.dump();
  }
  try {
    load_model(t.path().string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
  EXPECT_THROW(load_model((t.path() / "nope").string()), Error);
}

TEST(Bundle, DefaultArchitectureSize) {
  // Size check only; parameters need not be trained.
  std::vector<Mlp> nets;
  for (int i = 0; i < 8; ++i) nets.push_back(Mlp::initialized(20, 80, i));
  SnhModel m(SnhMeta{square(1000), 10, 0.2, 1000, 1, 0}, SizeLadder(25, 100, 8), std::move(nets),
             ScalingMode::kArea);
  TempDir t("size");
  save_model(m, t.path().string());
  std::uintmax_t total = 0;
  for (const auto& e : std::filesystem::directory_iterator(t.path())) total += e.file_size();
  EXPECT_GT(total, 1'000'000u);
  EXPECT_LT(total, 10'000'000u);
}

}  // namespace
}  // namespace snh
