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

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snh/error.hpp"
#include "snh/geo.hpp"
#include "snh/random.hpp"

namespace snh {

// Equi-width grid of cell width rho over a region. Cells are indexed row-major
// (index = row * cells_per_side + col) by their bottom-left corner. When the
// side is not a multiple of rho the last row and column extend past the region.
class Grid {
 public:
  Grid(Region region, double rho);

  const Region& region() const noexcept { return region_; }
  double rho() const noexcept { return rho_; }
  std::size_t cells_per_side() const noexcept { return cells_per_side_; }
  std::size_t cell_count() const noexcept { return cells_per_side_ * cells_per_side_; }
  // Total covered width, cells_per_side * rho >= region side.
  double extent() const noexcept { return static_cast<double>(cells_per_side_) * rho_; }

  PlanarPoint corner(std::size_t index) const noexcept {
    return {static_cast<double>(index % cells_per_side_) * rho_,
            static_cast<double>(index / cells_per_side_) * rho_};
  }
  std::vector<PlanarPoint> corners() const;

  // Cell holding an in-region point: the largest col/row whose corner is <= p.
  std::size_t cell_of(PlanarPoint p) const noexcept;

 private:
  std::size_t axis_index(double v) const noexcept;

  Region region_;
  double rho_;
  std::size_t cells_per_side_;
};

// Laplace(0, scale) by inverse CDF: -b * sgn(u) * ln(1 - 2|u|), u ~ U(-1/2, 1/2).
template <Engine64 G>
double laplace_sample(double scale, G& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "Laplace scale must be positive");
  }
  double u;
  do {
    u = uniform01(rng) - 0.5;
  } while (u == -0.5);
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

struct AccessAudit {
  std::size_t point_reads = 0;
  // Reads after the collection pass finished. Must stay zero.
  std::size_t post_collection_reads = 0;
  // Evaluation-only accesses (truth counting); not part of the private pipeline.
  std::size_t out_of_band_accesses = 0;

  bool compliant() const noexcept { return post_collection_reads == 0; }
};

// Instrumented view over the sensitive dataset. Every point read goes through
// scan(); once seal() is called further reads are counted as post-collection.
class AuditedDataset {
 public:
  explicit AuditedDataset(const PlanarDataset& data) : data_(data) {}

  const Region& region() const noexcept { return data_.region(); }
  // Cardinality is treated as public metadata.
  std::size_t size() const noexcept { return data_.size(); }

  template <class F>
  void scan(F&& visit) {
    for (const auto& p : data_.points()) {
      if (sealed_) {
        ++audit_.post_collection_reads;
      } else {
        ++audit_.point_reads;
      }
      visit(p);
    }
  }

  void seal() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }

  // Raw access for evaluation; recorded separately from the private pipeline.
  const PlanarDataset& out_of_band() {
    ++audit_.out_of_band_accesses;
    return data_;
  }

  const AccessAudit& audit() const noexcept { return audit_; }

 private:
  const PlanarDataset& data_;
  AccessAudit audit_;
  bool sealed_ = false;
};

// Released noisy cell counts. Answers are raw Laplace outputs (may be negative
// or fractional); clamping happens only when answering queries.
class NoisyHistogram {
 public:
  NoisyHistogram(Grid grid, std::vector<double> answers, double epsilon, std::size_t n);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> answers() const noexcept { return answers_; }
  double answer(std::size_t index) const noexcept { return answers_[index]; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t n() const noexcept { return n_; }

 private:
  Grid grid_;
  std::vector<double> answers_;
  double epsilon_;
  std::size_t n_;
};

inline constexpr int kHistogramFormatVersion = 1;

std::string histogram_to_json(const NoisyHistogram& h);
NoisyHistogram histogram_from_json(std::string_view text);
void save_histogram(const NoisyHistogram& h, const std::string& path);
NoisyHistogram load_histogram(const std::string& path);

namespace detail {

// Single counting pass followed by one noise() draw per cell. Seals `data`.
NoisyHistogram collect_with_noise(AuditedDataset& data, double rho, double epsilon,
                                  const std::function<double()>& noise);

}  // namespace detail

// epsilon-DP noisy grid: every cell count plus Lap(1/epsilon). Cells partition
// the region, so by parallel composition the whole release costs epsilon.
template <Engine64 G>
NoisyHistogram collect(AuditedDataset& data, double rho, double epsilon, G& rng) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  const double scale = 1.0 / epsilon;
  return detail::collect_with_noise(data, rho, epsilon,
                                    [&] { return laplace_sample(scale, rng); });
}

}  // namespace snh
