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

#include "snh/dp_collect.hpp"

#include <algorithm>

#include "json_io.hpp"

namespace snh {

namespace {

std::size_t cells_for(double side, double rho) {
  auto m = static_cast<std::size_t>(std::ceil(side / rho));
  // Guard against side/rho rounding just above an integer.
  if (m > 1 && static_cast<double>(m - 1) * rho >= side) --m;
  return std::max<std::size_t>(m, 1);
}

}  // namespace

Grid::Grid(Region region, double rho) : region_(region), rho_(rho), cells_per_side_(1) {
  if (!(rho > 0.0) || !(rho <= region.side())) {
    throw Error(ErrorCode::kInvalidArgument, "cell width must lie in (0, side], got " +
                                                 format_double(rho));
  }
  cells_per_side_ = cells_for(region.side(), rho);
}

std::vector<PlanarPoint> Grid::corners() const {
  std::vector<PlanarPoint> out;
  out.reserve(cell_count());
  for (std::size_t i = 0; i < cell_count(); ++i) out.push_back(corner(i));
  return out;
}

std::size_t Grid::axis_index(double v) const noexcept {
  if (!(v > 0.0)) return 0;
  auto i = static_cast<std::size_t>(v / rho_);
  i = std::min(i, cells_per_side_ - 1);
  // Settle on the exact corner comparison used by RangeQuery::contains.
  while (i > 0 && static_cast<double>(i) * rho_ > v) --i;
  while (i + 1 < cells_per_side_ && static_cast<double>(i + 1) * rho_ <= v) ++i;
  return i;
}

std::size_t Grid::cell_of(PlanarPoint p) const noexcept {
  return axis_index(p.y) * cells_per_side_ + axis_index(p.x);
}

NoisyHistogram::NoisyHistogram(Grid grid, std::vector<double> answers, double epsilon,
                               std::size_t n)
    : grid_(std::move(grid)), answers_(std::move(answers)), epsilon_(epsilon), n_(n) {
  if (answers_.size() != grid_.cell_count()) {
    throw Error(ErrorCode::kInvalidArgument, "histogram needs one answer per cell");
  }
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
}

namespace detail {

NoisyHistogram collect_with_noise(AuditedDataset& data, double rho, double epsilon,
                                  const std::function<double()>& noise) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  Grid grid(data.region(), rho);
  std::vector<double> counts(grid.cell_count(), 0.0);
  data.scan([&](PlanarPoint p) { counts[grid.cell_of(p)] += 1.0; });
  data.seal();
  for (auto& c : counts) c += noise();
  const std::size_t n = data.size();
  return NoisyHistogram(std::move(grid), std::move(counts), epsilon, n);
}

}  // namespace detail

std::string histogram_to_json(const NoisyHistogram& h) {
  internal::json j;
  j["version"] = kHistogramFormatVersion;
  j["region"] = internal::region_to_json(h.grid().region());
  j["rho"] = h.grid().rho();
  j["epsilon"] = h.epsilon();
  j["n"] = h.n();
  j["answers"] = std::vector<double>(h.answers().begin(), h.answers().end());
  return j.dump();
}

NoisyHistogram histogram_from_json(std::string_view text) {
  auto j = internal::parse_json_document(text, "histogram");
  internal::check_version(j, kHistogramFormatVersion, "histogram");
  return internal::guarded_parse("histogram", [&] {
    Grid grid(internal::region_from_json(j.at("region")), j.at("rho").get<double>());
    auto answers = j.at("answers").get<std::vector<double>>();
    if (answers.size() != grid.cell_count()) {
      throw Error(ErrorCode::kCorruptFile, "histogram: answer count does not match grid");
    }
    return NoisyHistogram(std::move(grid), std::move(answers), j.at("epsilon").get<double>(),
                          j.at("n").get<std::size_t>());
  });
}

void save_histogram(const NoisyHistogram& h, const std::string& path) {
  internal::write_text_file(path, histogram_to_json(h));
}

NoisyHistogram load_histogram(const std::string& path) {
  return histogram_from_json(internal::read_text_file(path));
}

}  // namespace snh
