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

#include "snh/augment.hpp"
#include "snh/dp_collect.hpp"

namespace snh {

// Uniform Grid cells per side: max(1, round(sqrt(n * epsilon / c))).
std::size_t ug_granularity(std::size_t n, double epsilon, double c = 10.0);

// Answers queries from a noisy grid with the uniformity assumption. Uses the
// same overlap kernel as augmentation; clamps to >= 0 only at answer time.
class GridAnswerer {
 public:
  explicit GridAnswerer(NoisyHistogram h) : histogram_(std::move(h)), kernel_(histogram_) {}

  const NoisyHistogram& histogram() const noexcept { return histogram_; }

  double answer_unclamped(const RangeQuery& q) const noexcept { return kernel_.mass(q); }
  double answer(const RangeQuery& q) const noexcept;

 private:
  NoisyHistogram histogram_;
  OverlapKernel kernel_;
};

// The UG baseline: an m x m grid with m from ug_granularity().
template <Engine64 G>
GridAnswerer uniform_grid(AuditedDataset& data, double epsilon, G& rng, double c = 10.0) {
  const std::size_t m = ug_granularity(data.size(), epsilon, c);
  return GridAnswerer(collect(data, data.region().side() / static_cast<double>(m), epsilon, rng));
}

}  // namespace snh
