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

#include "snh/baselines.hpp"
#include "snh/error.hpp"
#include "snh/eval.hpp"
#include "test_support.hpp"

namespace snh {
namespace {

using testing::square;

TEST(UgGranularity, Examples) {
  EXPECT_EQ(ug_granularity(100000, 0.2), 45u);
  EXPECT_EQ(ug_granularity(100000, 0.8), 89u);
  EXPECT_EQ(ug_granularity(50, 0.2), 1u);  // n * eps == c
  EXPECT_EQ(ug_granularity(1, 0.01), 1u);
  EXPECT_THROW(ug_granularity(10, 0.0), Error);
}

TEST(GridAnswerer, FullCellReturnsClampedAnswer) {
  GridAnswerer a(NoisyHistogram(Grid(square(100), 50), {1, -2, 3, 4}, 1, 10));
  EXPECT_DOUBLE_EQ(a.answer(RangeQuery({0, 0}, 50)), 1.0);
  EXPECT_DOUBLE_EQ(a.answer(RangeQuery({50, 0}, 50)), 0.0);
  EXPECT_DOUBLE_EQ(a.answer_unclamped(RangeQuery({50, 0}, 50)), -2.0);
}

TEST(GridAnswerer, QuarterOverlap) {
  GridAnswerer a(NoisyHistogram(Grid(square(100), 50), {1, 2, 3, 4}, 1, 10));
  EXPECT_DOUBLE_EQ(a.answer(RangeQuery({25, 25}, 50)), 2.5);
}

TEST(GridAnswerer, WholeGridNoNoiseIsN) {
  auto d = gen_mixture(5000, square(800),
                       std::vector<MixtureComponent>{{{200, 200}, 50, 1}, {{600, 500}, 80, 2}},
                       3);
  AuditedDataset a(d);
  GridAnswerer g(testing::collect_exact(a, 800.0 / 13));
  EXPECT_NEAR(g.answer(RangeQuery({0, 0}, 800)), 5000.0, 1e-7);
}

TEST(UniformGrid, UsesRuleOfThumbAndReadsOnce) {
  auto d = gen_uniform(20000, square(1000), 2);
  AuditedDataset a(d);
  Rng g(5);
  auto ug = uniform_grid(a, 0.2, g);
  EXPECT_EQ(ug.histogram().grid().cells_per_side(), 20u);
  EXPECT_EQ(a.audit().point_reads, 20000u);
  EXPECT_EQ(a.audit().post_collection_reads, 0u);
}

}  // namespace
}  // namespace snh
