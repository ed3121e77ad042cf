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

#include <cmath>
#include <set>

#include "snh/random.hpp"

namespace snh {
namespace {

TEST(DeriveSeed, StableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "a", 2), derive_seed(1, "a", 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t root : {0ULL, 1ULL, 42ULL}) {
    for (const char* s : {"init", "shuffle", "collect"}) {
      for (std::uint64_t i = 0; i < 10; ++i) seen.insert(derive_seed(root, s, i));
    }
  }
  EXPECT_EQ(seen.size(), 90u);
}

TEST(Uniform01, RangeAndMean) {
  Rng g(9);
  double sum = 0;
  for (int i = 0; i < 200000; ++i) {
    double u = uniform01(g);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 200000, 0.5, 0.005);
}

TEST(UniformIndex, CoversRangeEvenly) {
  Rng g(1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[uniform_index(g, 7)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(StandardNormal, Moments) {
  Rng g(2);
  const int n = 400000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double z = standard_normal(g);
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(SecureEngine, ProducesVaryingOutput) {
  SecureEngine e;
  std::set<std::uint64_t> v;
  for (int i = 0; i < 64; ++i) v.insert(e());
  EXPECT_GT(v.size(), 60u);
  double u = uniform01(e);
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

}  // namespace
}  // namespace snh
