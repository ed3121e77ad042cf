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
#include <iosfwd>
#include <span>
#include <vector>

#include "snh/dp_collect.hpp"
#include "snh/geo.hpp"

namespace snh {

// k training query sizes spaced uniformly in [l, u]:
// R[i] = l + (u - l) / k * (i + 1/2).
class SizeLadder {
 public:
  SizeLadder(double l, double u, std::size_t k);

  double lower() const noexcept { return l_; }
  double upper() const noexcept { return u_; }
  std::size_t k() const noexcept { return sizes_.size(); }
  std::span<const double> sizes() const noexcept { return sizes_; }
  double size(std::size_t i) const noexcept { return sizes_[i]; }

  // Index of the size closest to r; ties resolve to the smaller size.
  std::size_t nearest(double r) const noexcept;

 private:
  double l_;
  double u_;
  std::vector<double> sizes_;
};

// Area of the intersection of two squares (m^2); 0 when disjoint.
double overlap_area(const RangeQuery& a, const RangeQuery& b) noexcept;

// True when the intersection has positive area. Squares that only share an
// edge or a corner do not overlap.
bool overlaps(const RangeQuery& a, const RangeQuery& b) noexcept;

// Integrates the histogram's piecewise-uniform density over squares:
//   mass(q) = sum_c |q ∩ cell_c| / rho^2 * Y_D[c].
// Area outside the grid contributes nothing. Evaluated in O(1) per query from
// a summed-area table, where the integral is the bilinear interpolant of the
// table at fractional cell coordinates.
class OverlapKernel {
 public:
  explicit OverlapKernel(const NoisyHistogram& h);

  double mass(const RangeQuery& q) const noexcept;
  const Grid& grid() const noexcept { return grid_; }

 private:
  double cumulative(double x, double y) const noexcept;

  Grid grid_;
  std::size_t stride_;
  std::vector<double> table_;  // (m+1)^2 prefix sums, row-major by y
};

// Training queries at every grid corner, one block per ladder size.
class AugmentedSet {
 public:
  AugmentedSet(Grid grid, std::vector<double> sizes, std::vector<std::vector<double>> labels);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size_count() const noexcept { return sizes_.size(); }
  double size(std::size_t s) const noexcept { return sizes_[s]; }
  std::size_t queries_per_size() const noexcept { return grid_.cell_count(); }

  RangeQuery query(std::size_t s, std::size_t cell) const {
    return RangeQuery(grid_.corner(cell), sizes_[s]);
  }
  std::span<const double> labels(std::size_t s) const noexcept { return labels_[s]; }

 private:
  Grid grid_;
  std::vector<double> sizes_;
  std::vector<std::vector<double>> labels_;
};

AugmentedSet augment(const NoisyHistogram& h, const SizeLadder& ladder);

// w_(c,r): number of workload queries with positive-area overlap with each
// training query, laid out like AugmentedSet labels.
class WorkloadWeights {
 public:
  explicit WorkloadWeights(std::vector<std::vector<std::uint32_t>> weights)
      : weights_(std::move(weights)) {}

  std::span<const std::uint32_t> weights(std::size_t s) const noexcept { return weights_[s]; }
  std::size_t size_count() const noexcept { return weights_.size(); }

 private:
  std::vector<std::vector<std::uint32_t>> weights_;
};

WorkloadWeights workload_weights(const AugmentedSet& aug, std::span<const RangeQuery> workload);

// Every weight set to 1; used when no workload is available.
WorkloadWeights uniform_weights(const AugmentedSet& aug);

// Debug export of one size block: `cx,cy,r,label,weight`.
void write_augmented_csv(std::ostream& out, const AugmentedSet& aug, const WorkloadWeights& w,
                         std::size_t size_index);

}  // namespace snh
