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

#include "snh/geo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "snh/error.hpp"

namespace snh {

using internal::parse_double;
using internal::split_fields;

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "INVALID_ARGUMENT";
    case ErrorCode::kDatasetNotFound:
      return "DATASET_NOT_FOUND";
    case ErrorCode::kParseError:
      return "PARSE_ERROR";
    case ErrorCode::kVersionMismatch:
      return "VERSION_MISMATCH";
    case ErrorCode::kCorruptFile:
      return "CORRUPT_FILE";
    case ErrorCode::kIoError:
      return "IO_ERROR";
    case ErrorCode::kTrainingDiverged:
      return "TRAINING_DIVERGED";
    case ErrorCode::kParamSelectModelRequired:
      return "PARAMSELECT_MODEL_REQUIRED";
  }
  return "UNKNOWN";
}

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "coordinate out of range: lat=" + format_double(lat) +
                    " lon=" + format_double(lon));
  }
}

Region::Region(GeoPoint center, double side) : center_(center), side_(side) {
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw Error(ErrorCode::kInvalidArgument,
                "region side must be positive, got " + format_double(side));
  }
}

RangeQuery::RangeQuery(PlanarPoint corner, double size) : corner_(corner), size_(size) {
  if (!(size > 0.0) || !std::isfinite(size) || !std::isfinite(corner.x) ||
      !std::isfinite(corner.y)) {
    throw Error(ErrorCode::kInvalidArgument,
                "query size must be positive and finite, got " + format_double(size));
  }
}

bool in_region(const Region& region, PlanarPoint p) noexcept {
  return p.x >= 0.0 && p.x < region.side() && p.y >= 0.0 && p.y < region.side();
}

PlanarPoint project(const GeoPoint& p, const Region& region) noexcept {
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double lat0 = region.center().lat();
  const double lon0 = region.center().lon();
  const double half = region.side() / 2.0;
  return {kEarthRadiusMeters * (p.lon() - lon0) * std::cos(lat0 * kDegToRad) * kDegToRad + half,
          kEarthRadiusMeters * (p.lat() - lat0) * kDegToRad + half};
}

PlanarDataset::PlanarDataset(Region region, std::vector<PlanarPoint> points)
    : region_(region), points_(std::move(points)) {
  auto keep_end = std::stable_partition(points_.begin(), points_.end(),
                                        [&](PlanarPoint p) { return in_region(region_, p); });
  dropped_ = static_cast<std::size_t>(points_.end() - keep_end);
  points_.erase(keep_end, points_.end());
  points_.shrink_to_fit();
}

std::size_t true_count(const PlanarDataset& d, const RangeQuery& q) noexcept {
  return static_cast<std::size_t>(std::count_if(
      d.points().begin(), d.points().end(), [&](PlanarPoint p) { return q.contains(p); }));
}

CountIndex::CountIndex(const PlanarDataset& d) {
  std::vector<PlanarPoint> sorted(d.points().begin(), d.points().end());
  std::sort(sorted.begin(), sorted.end(),
            [](PlanarPoint a, PlanarPoint b) { return a.x < b.x; });
  xs_.reserve(sorted.size());
  ys_.reserve(sorted.size());
  for (const auto& p : sorted) {
    xs_.push_back(p.x);
    ys_.push_back(p.y);
  }
}

std::size_t CountIndex::count(const RangeQuery& q) const noexcept {
  const double x0 = q.corner().x;
  const double x1 = q.corner().x + q.size();
  const double y0 = q.corner().y;
  const double y1 = q.corner().y + q.size();
  auto lo = std::lower_bound(xs_.begin(), xs_.end(), x0);
  auto hi = std::lower_bound(lo, xs_.end(), x1);
  std::size_t n = 0;
  for (auto i = static_cast<std::size_t>(lo - xs_.begin());
       i < static_cast<std::size_t>(hi - xs_.begin()); ++i) {
    n += (ys_[i] >= y0 && ys_[i] < y1) ? 1 : 0;
  }
  return n;
}

double relative_error(double y, double truth, double psi) {
  if (!(psi > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "psi must be positive, got " + format_double(psi));
  }
  return std::abs(y - truth) / std::max(truth, psi);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kDatasetNotFound, "cannot open " + path);
  }
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write " + path);
  }
  return out;
}

int column_index(const std::vector<std::string_view>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

PlanarDataset read_geo_csv(std::istream& in, const Region& region) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "line 1: missing header");
  }
  const auto header = split_fields(line);
  const int lat_col = column_index(header, "lat");
  const int lon_col = column_index(header, "lon");
  if (lat_col < 0 || lon_col < 0) {
    throw Error(ErrorCode::kParseError, "line 1: header must contain lat and lon columns");
  }
  const auto needed = static_cast<std::size_t>(std::max(lat_col, lon_col));

  std::vector<PlanarPoint> points;
  std::vector<std::size_t> bad_lines;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::is_blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() <= needed) {
      bad_lines.push_back(line_no);
      continue;
    }
    auto lat = parse_double(fields[static_cast<std::size_t>(lat_col)]);
    auto lon = parse_double(fields[static_cast<std::size_t>(lon_col)]);
    if (!lat || !lon || !(*lat >= -90.0 && *lat <= 90.0) ||
        !(*lon >= -180.0 && *lon <= 180.0)) {
      bad_lines.push_back(line_no);
      continue;
    }
    points.push_back(project(GeoPoint(*lat, *lon), region));
  }
  if (!bad_lines.empty()) {
    std::ostringstream msg;
    msg << bad_lines.size() << " invalid row(s) at line(s)";
    for (std::size_t i = 0; i < bad_lines.size() && i < 20; ++i) msg << ' ' << bad_lines[i];
    if (bad_lines.size() > 20) msg << " ...";
    throw Error(ErrorCode::kParseError, msg.str());
  }
  return PlanarDataset(region, std::move(points));
}

PlanarDataset read_geo_csv_file(const std::string& path, const Region& region) {
  auto in = open_input(path);
  return read_geo_csv(in, region);
}

void write_planar_csv(std::ostream& out, const PlanarDataset& d) {
  const auto& r = d.region();
  out << "# snh-planar v1 center_lat=" << format_double(r.center().lat())
      << " center_lon=" << format_double(r.center().lon()) << " side=" << format_double(r.side())
      << '\n';
  out << "x,y\n";
  for (const auto& p : d.points()) {
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
  }
}

PlanarDataset read_planar_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# snh-planar", 0) != 0) {
    throw Error(ErrorCode::kParseError, "line 1: expected '# snh-planar v1' region line");
  }
  std::istringstream meta(line);
  std::string tok;
  std::optional<double> lat, lon, side;
  meta >> tok >> tok >> tok;
  if (tok != "v1") {
    throw Error(ErrorCode::kVersionMismatch, "unsupported planar dataset version " + tok);
  }
  while (meta >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    auto key = tok.substr(0, eq);
    auto value = parse_double(std::string_view(tok).substr(eq + 1));
    if (key == "center_lat") lat = value;
    if (key == "center_lon") lon = value;
    if (key == "side") side = value;
  }
  if (!lat || !lon || !side) {
    throw Error(ErrorCode::kParseError, "line 1: region line needs center_lat, center_lon, side");
  }
  Region region(GeoPoint(*lat, *lon), *side);

  if (!std::getline(in, line) || internal::trim(line) != "x,y") {
    throw Error(ErrorCode::kParseError, "line 2: expected header x,y");
  }
  std::vector<PlanarPoint> points;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::is_blank(line)) continue;
    auto fields = split_fields(line);
    std::optional<double> x, y;
    if (fields.size() == 2) {
      x = parse_double(fields[0]);
      y = parse_double(fields[1]);
    }
    if (!x || !y) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": invalid point");
    }
    points.push_back({*x, *y});
  }
  return PlanarDataset(region, std::move(points));
}

void write_planar_csv_file(const std::string& path, const PlanarDataset& d) {
  auto out = open_output(path);
  write_planar_csv(out, d);
}

PlanarDataset read_planar_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_planar_csv(in);
}

std::vector<RangeQuery> read_queries_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "line 1: missing header");
  }
  const auto header = split_fields(line);
  const int cx = column_index(header, "cx");
  const int cy = column_index(header, "cy");
  const int r = column_index(header, "r");
  if (cx < 0 || cy < 0 || r < 0) {
    throw Error(ErrorCode::kParseError, "line 1: header must contain cx, cy, r");
  }
  const auto needed = static_cast<std::size_t>(std::max({cx, cy, r}));
  std::vector<RangeQuery> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::is_blank(line)) continue;
    auto fields = split_fields(line);
    std::optional<double> x, y, s;
    if (fields.size() > needed) {
      x = parse_double(fields[static_cast<std::size_t>(cx)]);
      y = parse_double(fields[static_cast<std::size_t>(cy)]);
      s = parse_double(fields[static_cast<std::size_t>(r)]);
    }
    if (!x || !y || !s || !(*s > 0.0)) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": invalid query");
    }
    out.emplace_back(PlanarPoint{*x, *y}, *s);
  }
  return out;
}

std::vector<RangeQuery> read_queries_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return read_queries_csv(in);
}

void write_queries_csv(std::ostream& out, std::span<const RangeQuery> queries) {
  out << "cx,cy,r\n";
  for (const auto& q : queries) {
    out << format_double(q.corner().x) << ',' << format_double(q.corner().y) << ','
        << format_double(q.size()) << '\n';
  }
}

}  // namespace snh
