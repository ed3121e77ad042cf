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

#include "snh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json_io.hpp"
#include "snh/error.hpp"
#include "snh/random.hpp"

namespace snh {

Workload gen_workload(const Region& region, std::size_t count, double l, double u,
                      std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "workload needs at least one query");
  if (!(l > 0.0) || !(l <= u)) {
    throw Error(ErrorCode::kInvalidArgument, "workload sizes need 0 < l <= u");
  }
  Rng rng(seed);
  Workload w{{}, seed, l, u};
  w.queries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double cx = uniform(rng, 0.0, region.side());
    const double cy = uniform(rng, 0.0, region.side());
    const double r = uniform(rng, l, u);
    w.queries.emplace_back(PlanarPoint{cx - r / 2.0, cy - r / 2.0}, r);
  }
  return w;
}

Workload gen_workload_at_records(const PlanarDataset& anchors, std::size_t count, double l,
                                 double u, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "workload needs at least one query");
  if (anchors.size() == 0) throw Error(ErrorCode::kInvalidArgument, "no records to anchor on");
  if (!(l > 0.0) || !(l <= u)) {
    throw Error(ErrorCode::kInvalidArgument, "workload sizes need 0 < l <= u");
  }
  Rng rng(seed);
  Workload w{{}, seed, l, u};
  w.queries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto c = anchors.points()[uniform_index(rng, anchors.size())];
    const double r = uniform(rng, l, u);
    w.queries.emplace_back(PlanarPoint{c.x - r / 2.0, c.y - r / 2.0}, r);
  }
  return w;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "uniform") return SyntheticKind::kUniform;
  if (name == "gaussian-mixture" || name == "mixture") return SyntheticKind::kGaussianMixture;
  throw Error(ErrorCode::kInvalidArgument, "kind must be 'uniform' or 'gaussian-mixture'");
}

PlanarDataset gen_uniform(std::size_t n, const Region& region, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  Rng rng(seed);
  std::vector<PlanarPoint> pts(n);
  for (auto& p : pts) {
    p.x = uniform(rng, 0.0, region.side());
    p.y = uniform(rng, 0.0, region.side());
  }
  return PlanarDataset(region, std::move(pts));
}

PlanarDataset gen_mixture(std::size_t n, const Region& region,
                          std::span<const MixtureComponent> components, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (components.empty()) throw Error(ErrorCode::kInvalidArgument, "mixture needs components");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !(c.sigma >= 0.0) || !in_region(region, c.center)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "mixture components need positive weight, sigma >= 0, center in region");
    }
    total += c.weight;
    cumulative.push_back(total);
  }
  Rng rng(seed);
  std::vector<PlanarPoint> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    const double pick = uniform01(rng) * total;
    const auto idx = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto& c = components[std::min(idx, components.size() - 1)];
    PlanarPoint p{c.center.x + c.sigma * standard_normal(rng),
                  c.center.y + c.sigma * standard_normal(rng)};
    if (in_region(region, p)) pts.push_back(p);
  }
  return PlanarDataset(region, std::move(pts));
}

std::vector<MixtureComponent> random_mixture(const Region& region, std::size_t count,
                                             std::uint64_t seed, double sigma_lo,
                                             double sigma_hi) {
  Rng rng(seed);
  const double s = region.side();
  std::vector<MixtureComponent> out(count);
  for (auto& c : out) {
    c.center = {uniform(rng, 0.1 * s, 0.9 * s), uniform(rng, 0.1 * s, 0.9 * s)};
    c.sigma = uniform(rng, sigma_lo, sigma_hi) * s;
    c.weight = uniform(rng, 0.5, 1.5);
  }
  return out;
}

ErrorSummary summarize(std::span<const double> errors) {
  ErrorSummary s;
  s.count = errors.size();
  if (errors.empty()) return s;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  const std::size_t mid = s.count / 2;
  s.median = (s.count % 2 == 1) ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  const double pos = 0.9 * static_cast<double>(s.count - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.count - 1);
  s.p90 = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  return s;
}

EvalReport evaluate(const Answerer& answerer, std::span<const RangeQuery> queries,
                    const PlanarDataset& truth, double psi) {
  if (!(psi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "psi must be positive");
  const CountIndex index(truth);
  EvalReport report;
  report.psi = psi;
  report.rows.reserve(queries.size());
  std::vector<double> errors;
  errors.reserve(queries.size());
  for (const auto& q : queries) {
    const double estimate = answerer(q);
    const auto t = static_cast<double>(index.count(q));
    const double err = relative_error(estimate, t, psi);
    report.rows.push_back({q, estimate, t, err});
    errors.push_back(err);
  }
  report.summary = summarize(errors);
  return report;
}

EvalReport evaluate(const Answerer& answerer, std::span<const RangeQuery> queries,
                    const PlanarDataset& truth) {
  return evaluate(answerer, queries, truth, std::max(default_psi(truth.size()), 1e-3));
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "cx,cy,r,estimate,truth,rel_error\n";
  for (const auto& row : report.rows) {
    out << format_double(row.query.corner().x) << ',' << format_double(row.query.corner().y)
        << ',' << format_double(row.query.size()) << ',' << format_double(row.estimate) << ','
        << format_double(row.truth) << ',' << format_double(row.rel_error) << '\n';
  }
}

std::string report_summary_json(const EvalReport& report) {
  internal::json j;
  j["count"] = report.summary.count;
  j["mean"] = report.summary.mean;
  j["median"] = report.summary.median;
  j["p90"] = report.summary.p90;
  j["psi"] = report.psi;
  j["truth_access"] = "out-of-band (evaluation only)";
  internal::json cfg = internal::json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2);
}

}  // namespace snh
