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
#include <string>
#include <vector>

namespace snh {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

// Geographic coordinate in degrees.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

// Square spatial region of `side` meters centered at `center`.
class Region {
 public:
  Region(GeoPoint center, double side);

  const GeoPoint& center() const noexcept { return center_; }
  double side() const noexcept { return side_; }

  friend bool operator==(const Region&, const Region&) = default;

 private:
  GeoPoint center_;
  double side_;
};

// Local planar coordinates in meters; origin at the region's bottom-left corner.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

// Axis-parallel square range count query: bottom-left corner and side length.
class RangeQuery {
 public:
  RangeQuery(PlanarPoint corner, double size);

  const PlanarPoint& corner() const noexcept { return corner_; }
  double size() const noexcept { return size_; }

  // Half-open on both axes: corner <= p < corner + size.
  bool contains(PlanarPoint p) const noexcept {
    return corner_.x <= p.x && p.x < corner_.x + size_ && corner_.y <= p.y &&
           p.y < corner_.y + size_;
  }

  friend bool operator==(const RangeQuery&, const RangeQuery&) = default;

 private:
  PlanarPoint corner_;
  double size_;
};

bool in_region(const Region& region, PlanarPoint p) noexcept;

// Equirectangular projection centered at the region center.
PlanarPoint project(const GeoPoint& p, const Region& region) noexcept;

// Immutable set of planar points, all within `region`.
class PlanarDataset {
 public:
  // Points outside the region are dropped; see dropped().
  PlanarDataset(Region region, std::vector<PlanarPoint> points);

  const Region& region() const noexcept { return region_; }
  std::span<const PlanarPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t dropped() const noexcept { return dropped_; }

 private:
  Region region_;
  std::vector<PlanarPoint> points_;
  std::size_t dropped_ = 0;
};

// Exact half-open count of points inside `q` (linear scan).
std::size_t true_count(const PlanarDataset& d, const RangeQuery& q) noexcept;

// Read-only x-sorted copy of a dataset for repeated exact counting.
class CountIndex {
 public:
  explicit CountIndex(const PlanarDataset& d);

  std::size_t count(const RangeQuery& q) const noexcept;
  std::size_t size() const noexcept { return xs_.size(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// |y - truth| / max(truth, psi). Throws on psi <= 0.
double relative_error(double y, double truth, double psi);

// --- file formats ---------------------------------------------------------

// CSV with header containing `lat` and `lon` columns. Every row is projected
// into `region`; rows that do not parse are rejected with their line numbers.
PlanarDataset read_geo_csv(std::istream& in, const Region& region);
PlanarDataset read_geo_csv_file(const std::string& path, const Region& region);

// Planar dataset file: a `# snh-planar v1 ...` region line followed by `x,y`.
void write_planar_csv(std::ostream& out, const PlanarDataset& d);
PlanarDataset read_planar_csv(std::istream& in);
void write_planar_csv_file(const std::string& path, const PlanarDataset& d);
PlanarDataset read_planar_csv_file(const std::string& path);

// Query CSV `cx,cy,r`.
std::vector<RangeQuery> read_queries_csv(std::istream& in);
std::vector<RangeQuery> read_queries_csv_file(const std::string& path);
void write_queries_csv(std::ostream& out, std::span<const RangeQuery> queries);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace snh
