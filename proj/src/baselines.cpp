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

#include "snh/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace snh {

std::size_t ug_granularity(std::size_t n, double epsilon, double c) {
  if (!(epsilon > 0.0) || !(c > 0.0) || n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "UG granularity needs n, epsilon, c > 0");
  }
  const double m = std::round(std::sqrt(static_cast<double>(n) * epsilon / c));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

double GridAnswerer::answer(const RangeQuery& q) const noexcept {
  return std::max(0.0, kernel_.mass(q));
}

}  // namespace snh
