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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "snh/geo.hpp"

namespace snh {

struct Workload {
  std::vector<RangeQuery> queries;
  std::uint64_t seed = 0;
  double l = 25.0;
  double u = 100.0;
};

// Query centers uniform over the region, sizes uniform in [l, u]; corner =
// center - r/2, so queries near the border may extend past it.
Workload gen_workload(const Region& region, std::size_t count = 5000, double l = 25.0,
                      double u = 100.0, std::uint64_t seed = 0);

// Same, but each center is a record of `anchors` drawn uniformly with
// replacement, so queries follow the data density.
Workload gen_workload_at_records(const PlanarDataset& anchors, std::size_t count = 5000,
                                 double l = 25.0, double u = 100.0, std::uint64_t seed = 0);

struct MixtureComponent {
  PlanarPoint center;
  double sigma = 0.0;   // meters; 0 puts every point at the center
  double weight = 1.0;  // relative
};

enum class SyntheticKind { kUniform, kGaussianMixture };

SyntheticKind parse_synthetic_kind(std::string_view name);

PlanarDataset gen_uniform(std::size_t n, const Region& region, std::uint64_t seed);

// Isotropic Gaussian components, truncated to the region by rejection.
PlanarDataset gen_mixture(std::size_t n, const Region& region,
                          std::span<const MixtureComponent> components, std::uint64_t seed);

// `count` components with centers in the middle 80% of the region, sigma
// uniform in [sigma_lo, sigma_hi] * side and weights uniform in [0.5, 1.5].
std::vector<MixtureComponent> random_mixture(const Region& region, std::size_t count,
                                             std::uint64_t seed, double sigma_lo = 0.02,
                                             double sigma_hi = 0.08);

struct ErrorSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
};

// Median averages the two middle values for even counts; p90 interpolates
// linearly between order statistics.
ErrorSummary summarize(std::span<const double> errors);

struct EvalRow {
  RangeQuery query;
  double estimate;
  double truth;
  double rel_error;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  ErrorSummary summary;
  double psi = 0.0;
  // Resolved configuration echoed into the JSON summary.
  std::vector<std::pair<std::string, std::string>> config;
};

using Answerer = std::function<double(const RangeQuery&)>;

inline double default_psi(std::size_t n) { return 0.001 * static_cast<double>(n); }

// Truth counts come straight from `truth`; this is evaluation-only access and
// not part of any private release.
EvalReport evaluate(const Answerer& answerer, std::span<const RangeQuery> queries,
                    const PlanarDataset& truth, double psi);
EvalReport evaluate(const Answerer& answerer, std::span<const RangeQuery> queries,
                    const PlanarDataset& truth);

// `cx,cy,r,estimate,truth,rel_error`
void write_report_csv(std::ostream& out, const EvalReport& report);
std::string report_summary_json(const EvalReport& report);

}  // namespace snh
