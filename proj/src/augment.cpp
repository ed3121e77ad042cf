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

#include "snh/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace snh {

SizeLadder::SizeLadder(double l, double u, std::size_t k) : l_(l), u_(u) {
  if (!(l > 0.0) || !(l <= u) || !std::isfinite(u) || k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "size ladder needs 0 < l <= u and k >= 1");
  }
  const double step = (u - l) / static_cast<double>(k);
  sizes_.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    sizes_.push_back(l + step * (static_cast<double>(i) + 0.5));
  }
}

std::size_t SizeLadder::nearest(double r) const noexcept {
  std::size_t best = 0;
  double best_dist = std::abs(r - sizes_[0]);
  for (std::size_t i = 1; i < sizes_.size(); ++i) {
    const double d = std::abs(r - sizes_[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

double overlap_area(const RangeQuery& a, const RangeQuery& b) noexcept {
  const double w = std::min(a.corner().x + a.size(), b.corner().x + b.size()) -
                   std::max(a.corner().x, b.corner().x);
  const double h = std::min(a.corner().y + a.size(), b.corner().y + b.size()) -
                   std::max(a.corner().y, b.corner().y);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

bool overlaps(const RangeQuery& a, const RangeQuery& b) noexcept {
  return std::max(a.corner().x, b.corner().x) <
             std::min(a.corner().x + a.size(), b.corner().x + b.size()) &&
         std::max(a.corner().y, b.corner().y) <
             std::min(a.corner().y + a.size(), b.corner().y + b.size());
}

OverlapKernel::OverlapKernel(const NoisyHistogram& h)
    : grid_(h.grid()), stride_(h.grid().cells_per_side() + 1), table_(stride_ * stride_, 0.0) {
  const std::size_t m = grid_.cells_per_side();
  for (std::size_t row = 0; row < m; ++row) {
    double running = 0.0;
    for (std::size_t col = 0; col < m; ++col) {
      running += h.answer(row * m + col);
      table_[(row + 1) * stride_ + col + 1] = table_[row * stride_ + col + 1] + running;
    }
  }
}

double OverlapKernel::cumulative(double x, double y) const noexcept {
  const auto m = static_cast<double>(grid_.cells_per_side());
  const double u = std::clamp(x / grid_.rho(), 0.0, m);
  const double v = std::clamp(y / grid_.rho(), 0.0, m);
  const auto a = static_cast<std::size_t>(std::min(std::floor(u), m - 1.0));
  const auto b = static_cast<std::size_t>(std::min(std::floor(v), m - 1.0));
  const double fu = u - static_cast<double>(a);
  const double fv = v - static_cast<double>(b);
  const double s00 = table_[b * stride_ + a];
  const double s10 = table_[b * stride_ + a + 1];
  const double s01 = table_[(b + 1) * stride_ + a];
  const double s11 = table_[(b + 1) * stride_ + a + 1];
  return s00 + fu * (s10 - s00) + fv * (s01 - s00) + fu * fv * (s11 - s10 - s01 + s00);
}

double OverlapKernel::mass(const RangeQuery& q) const noexcept {
  const double x0 = q.corner().x;
  const double y0 = q.corner().y;
  const double x1 = x0 + q.size();
  const double y1 = y0 + q.size();
  return cumulative(x1, y1) - cumulative(x0, y1) - cumulative(x1, y0) + cumulative(x0, y0);
}

AugmentedSet::AugmentedSet(Grid grid, std::vector<double> sizes,
                           std::vector<std::vector<double>> labels)
    : grid_(std::move(grid)), sizes_(std::move(sizes)), labels_(std::move(labels)) {
  if (labels_.size() != sizes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one label block per size required");
  }
  for (const auto& block : labels_) {
    if (block.size() != grid_.cell_count()) {
      throw Error(ErrorCode::kInvalidArgument, "label block must cover every grid corner");
    }
  }
}

AugmentedSet augment(const NoisyHistogram& h, const SizeLadder& ladder) {
  const OverlapKernel kernel(h);
  const Grid& grid = h.grid();
  std::vector<double> sizes(ladder.sizes().begin(), ladder.sizes().end());
  std::vector<std::vector<double>> labels;
  labels.reserve(sizes.size());
  for (double r : sizes) {
    std::vector<double> block(grid.cell_count());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      block[c] = kernel.mass(RangeQuery(grid.corner(c), r));
    }
    labels.push_back(std::move(block));
  }
  return AugmentedSet(grid, std::move(sizes), std::move(labels));
}

namespace {

// Buckets workload queries by bottom-left corner. A query of size s can only
// overlap [x0, x1) if its corner lies in (x0 - max_size, x1).
class WorkloadIndex {
 public:
  explicit WorkloadIndex(std::span<const RangeQuery> workload) : workload_(workload) {
    if (workload.empty()) return;
    min_x_ = min_y_ = std::numeric_limits<double>::infinity();
    double max_x = -min_x_;
    double max_y = -min_y_;
    for (const auto& q : workload) {
      min_x_ = std::min(min_x_, q.corner().x);
      min_y_ = std::min(min_y_, q.corner().y);
      max_x = std::max(max_x, q.corner().x);
      max_y = std::max(max_y, q.corner().y);
      max_size_ = std::max(max_size_, q.size());
    }
    constexpr double kMaxBucketsPerAxis = 1024.0;
    const double span = std::max(max_x - min_x_, max_y - min_y_);
    width_ = std::max(max_size_, span / kMaxBucketsPerAxis);
    nx_ = static_cast<std::size_t>((max_x - min_x_) / width_) + 1;
    ny_ = static_cast<std::size_t>((max_y - min_y_) / width_) + 1;
    buckets_.resize(nx_ * ny_);
    for (std::size_t i = 0; i < workload.size(); ++i) {
      buckets_[bucket(workload[i].corner().y, ny_, min_y_) * nx_ +
               bucket(workload[i].corner().x, nx_, min_x_)]
          .push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::uint32_t count_overlapping(const RangeQuery& t) const {
    if (workload_.empty()) return 0;
    const double x0 = t.corner().x - max_size_;
    const double y0 = t.corner().y - max_size_;
    const double x1 = t.corner().x + t.size();
    const double y1 = t.corner().y + t.size();
    if (x1 < min_x_ || y1 < min_y_) return 0;
    const std::size_t bx0 = bucket(x0, nx_, min_x_);
    const std::size_t bx1 = bucket(x1, nx_, min_x_);
    const std::size_t by0 = bucket(y0, ny_, min_y_);
    const std::size_t by1 = bucket(y1, ny_, min_y_);
    std::uint32_t n = 0;
    for (std::size_t by = by0; by <= by1; ++by) {
      for (std::size_t bx = bx0; bx <= bx1; ++bx) {
        for (auto i : buckets_[by * nx_ + bx]) {
          n += overlaps(workload_[i], t) ? 1 : 0;
        }
      }
    }
    return n;
  }

 private:
  std::size_t bucket(double v, std::size_t n, double origin) const noexcept {
    const double b = std::floor((v - origin) / width_);
    if (!(b > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(b), n - 1);
  }

  std::span<const RangeQuery> workload_;
  double min_x_ = 0.0;
  double min_y_ = 0.0;
  double max_size_ = 0.0;
  double width_ = 1.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace

WorkloadWeights workload_weights(const AugmentedSet& aug, std::span<const RangeQuery> workload) {
  const WorkloadIndex index(workload);
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(aug.size_count());
  for (std::size_t s = 0; s < aug.size_count(); ++s) {
    std::vector<std::uint32_t> block(aug.queries_per_size());
    for (std::size_t c = 0; c < block.size(); ++c) {
      block[c] = index.count_overlapping(aug.query(s, c));
    }
    out.push_back(std::move(block));
  }
  return WorkloadWeights(std::move(out));
}

WorkloadWeights uniform_weights(const AugmentedSet& aug) {
  return WorkloadWeights(std::vector<std::vector<std::uint32_t>>(
      aug.size_count(), std::vector<std::uint32_t>(aug.queries_per_size(), 1U)));
}

void write_augmented_csv(std::ostream& out, const AugmentedSet& aug, const WorkloadWeights& w,
                         std::size_t size_index) {
  out << "cx,cy,r,label,weight\n";
  const auto labels = aug.labels(size_index);
  const auto weights = w.weights(size_index);
  for (std::size_t c = 0; c < aug.queries_per_size(); ++c) {
    const auto corner = aug.grid().corner(c);
    out << format_double(corner.x) << ',' << format_double(corner.y) << ','
        << format_double(aug.size(size_index)) << ',' << format_double(labels[c]) << ','
        << weights[c] << '\n';
  }
}

}  // namespace snh
