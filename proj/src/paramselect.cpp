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

#include "snh/paramselect.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "csv_util.hpp"
#include "json_io.hpp"
#include "snh/eval.hpp"
#include "snh/random.hpp"

namespace snh {

double entropy(const PlanarDataset& d, std::size_t g) {
  if (d.empty()) throw Error(ErrorCode::kInvalidArgument, "entropy of an empty dataset");
  if (g < 1) throw Error(ErrorCode::kInvalidArgument, "entropy grid must be >= 1");
  const double cell = d.region().side() / static_cast<double>(g);
  std::vector<std::size_t> counts(g * g, 0);
  for (const auto& p : d.points()) {
    const auto cx = std::min(static_cast<std::size_t>(p.x / cell), g - 1);
    const auto cy = std::min(static_cast<std::size_t>(p.y / cell), g - 1);
    ++counts[cy * g + cx];
  }
  const auto n = static_cast<double>(d.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

FeatureVector features_with_entropy(double entropy_nats, std::size_t n, double epsilon) {
  if (n == 0 || !(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "features need n > 0 and epsilon > 0");
  }
  const double ne = static_cast<double>(n) * epsilon;
  return {static_cast<double>(n), epsilon, 1.0 / ne, 1.0 / std::sqrt(ne), entropy_nats};
}

FeatureVector features(const PlanarDataset& d_star, std::size_t n, double epsilon,
                       std::size_t g) {
  return features_with_entropy(entropy(d_star, g), n, epsilon);
}

std::vector<double> geometric_rho_ladder(double side, std::size_t steps, double fine_div,
                                         double coarse_div) {
  if (!(side > 0.0) || steps < 1 || !(fine_div >= coarse_div) || !(coarse_div >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid rho ladder");
  }
  const double lo = side / fine_div;
  const double hi = side / coarse_div;
  std::vector<double> out;
  if (steps == 1) return {lo};
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    out.push_back(lo * std::pow(hi / lo, t));
  }
  out.back() = hi;
  return out;
}

std::size_t lowest_error_index(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorCode::kInvalidArgument, "no errors to compare");
  std::size_t best = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] < errors[best]) best = i;
  }
  return best;
}

RhoSearchResult empirical_best_rho(const PlanarDataset& d_public, double epsilon,
                                   std::span<const double> candidates,
                                   std::span<const RangeQuery> eval_queries,
                                   std::span<const std::uint64_t> seeds, const FitConfig& base,
                                   std::span<const RangeQuery> training_workload) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no rho candidates");
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds");
  RhoSearchResult out;
  out.candidates.assign(candidates.begin(), candidates.end());
  std::sort(out.candidates.begin(), out.candidates.end());
  out.candidates.erase(std::unique(out.candidates.begin(), out.candidates.end()),
                       out.candidates.end());

  const double psi = std::max(default_psi(d_public.size()), 1e-3);
  for (double rho : out.candidates) {
    double total = 0.0;
    for (auto s : seeds) {
      FitConfig cfg = base;
      cfg.epsilon = epsilon;
      cfg.rho = rho;
      cfg.seed = derive_seed(base.seed, "rho-search", std::bit_cast<std::uint64_t>(rho) ^ mix64(s));
      const auto fitted = fit(d_public, cfg, training_workload);
      const auto report = evaluate([&](const RangeQuery& q) { return fitted.model.answer(q); },
                                   eval_queries, d_public, psi);
      total += report.summary.median;
    }
    out.median_errors.push_back(total / static_cast<double>(seeds.size()));
  }
  // Candidates are ascending, so the smaller rho wins ties.
  out.best_rho = out.candidates[lowest_error_index(out.median_errors)];
  return out;
}

// --- trees ------------------------------------------------------------------

RegressionTree::RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "tree without nodes");
  const auto n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.feature >= static_cast<int>(FeatureVector::kSize) ||
        (node.feature >= 0 && (node.left <= 0 || node.left >= n || node.right <= 0 ||
                               node.right >= n))) {
      throw Error(ErrorCode::kCorruptFile, "malformed regression tree");
    }
  }
}

double RegressionTree::predict(const std::array<double, FeatureVector::kSize>& x) const noexcept {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const noexcept {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

TreeEnsemble::TreeEnsemble(std::vector<RegressionTree> trees, TreeConfig config)
    : trees_(std::move(trees)), config_(config) {
  if (trees_.empty()) throw Error(ErrorCode::kInvalidArgument, "ensemble without trees");
}

double TreeEnsemble::predict(const FeatureVector& f) const noexcept {
  const auto x = f.values();
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const ParamSample> samples, const TreeConfig& cfg, std::uint64_t seed)
      : samples_(samples), cfg_(cfg), rng_(seed) {}

  RegressionTree build() {
    std::vector<std::size_t> idx(samples_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  double label(std::size_t i) const { return samples_[i].label; }
  double feature(std::size_t i, std::size_t f) const { return samples_[i].features.values()[f]; }

  static double sse(double sum, double sum_sq, double count) {
    return count > 0.0 ? sum_sq - sum * sum / count : 0.0;
  }

  int grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    double sum_sq = 0.0;
    double lo = label(idx[0]);
    double hi = lo;
    for (auto i : idx) {
      sum += label(i);
      sum_sq += label(i) * label(i);
      lo = std::min(lo, label(i));
      hi = std::max(hi, label(i));
    }
    const auto count = static_cast<double>(idx.size());
    // Clamp guards the mean against rounding outside the label range.
    nodes_[static_cast<std::size_t>(id)].value = std::clamp(sum / count, lo, hi);
    if (depth >= cfg_.max_depth || idx.size() < std::max<std::size_t>(cfg_.min_samples_split, 2) ||
        lo == hi) {
      return id;
    }

    const double parent = sse(sum, sum_sq, count);
    std::array<std::size_t, FeatureVector::kSize> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng_, i)]);
    }
    const std::size_t want = (cfg_.max_features == 0 || cfg_.max_features > order.size())
                                 ? order.size()
                                 : cfg_.max_features;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::size_t tried = 0;
    for (std::size_t f : order) {
      if (tried == want) break;
      double fmin = feature(idx[0], f);
      double fmax = fmin;
      for (auto i : idx) {
        fmin = std::min(fmin, feature(i, f));
        fmax = std::max(fmax, feature(i, f));
      }
      if (!(fmax > fmin)) continue;
      ++tried;
      double thr = uniform(rng_, fmin, fmax);
      if (thr >= fmax) thr = fmin;
      double ls = 0.0, lss = 0.0, lc = 0.0;
      for (auto i : idx) {
        if (feature(i, f) <= thr) {
          ls += label(i);
          lss += label(i) * label(i);
          lc += 1.0;
        }
      }
      const double gain =
          parent - sse(ls, lss, lc) - sse(sum - ls, sum_sq - lss, count - lc);
      if (best_feature < 0 || gain > best_gain) {
        best_feature = static_cast<int>(f);
        best_threshold = thr;
        best_gain = gain;
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (feature(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
          .push_back(i);
    }
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::span<const ParamSample> samples_;
  const TreeConfig& cfg_;
  Rng rng_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

TreeEnsemble fit_ensemble(std::span<const ParamSample> samples, const TreeConfig& config) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "tree ensemble needs at least two samples");
  }
  if (config.n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  for (const auto& s : samples) {
    if (!(s.label > 0.0) || !std::isfinite(s.label)) {
      throw Error(ErrorCode::kInvalidArgument, "sample labels must be positive");
    }
  }
  std::vector<RegressionTree> trees;
  trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    trees.push_back(TreeBuilder(samples, config, derive_seed(config.seed, "tree", t)).build());
  }
  return TreeEnsemble(std::move(trees), config);
}

double predict_rho(const TreeEnsemble& model, const Region& region, const PlanarDataset& d_star,
                   std::size_t n, double epsilon) {
  if (!(d_star.region() == region)) {
    throw Error(ErrorCode::kInvalidArgument,
                "public inference dataset must cover the same region");
  }
  return model.predict(features(d_star, n, epsilon));
}

std::vector<ParamSample> build_training_set(std::span<const PlanarDataset> public_datasets,
                                            const TrainingSetConfig& cfg) {
  if (cfg.epsilons.empty()) throw Error(ErrorCode::kInvalidArgument, "no epsilons");
  std::vector<ParamSample> out;
  for (std::size_t di = 0; di < public_datasets.size(); ++di) {
    const auto& d = public_datasets[di];
    const double h = entropy(d);
    const auto candidates = geometric_rho_ladder(d.region().side(), cfg.ladder_steps);
    const auto eval = gen_workload(d.region(), cfg.eval_queries, cfg.fit.ladder.l,
                                   cfg.fit.ladder.u, derive_seed(cfg.fit.seed, "ps-eval", di));
    const auto train_w = gen_workload(d.region(), cfg.eval_queries, cfg.fit.ladder.l,
                                      cfg.fit.ladder.u, derive_seed(cfg.fit.seed, "ps-qw", di));
    for (double eps : cfg.epsilons) {
      const auto res = empirical_best_rho(d, eps, candidates, eval.queries, cfg.seeds, cfg.fit,
                                          train_w.queries);
      out.push_back({features_with_entropy(h, d.size(), eps), res.best_rho});
    }
  }
  return out;
}

// --- files ------------------------------------------------------------------

std::string ensemble_to_json(const TreeEnsemble& m) {
  internal::json j;
  j["version"] = kParamSelectFormatVersion;
  j["feature_names"] = std::vector<std::string>(FeatureVector::kNames.begin(),
                                                FeatureVector::kNames.end());
  j["n_trees"] = m.config().n_trees;
  j["max_depth"] = m.config().max_depth;
  j["max_features"] = m.config().max_features;
  j["min_samples_split"] = m.config().min_samples_split;
  j["seed"] = m.config().seed;
  auto trees = internal::json::array();
  for (const auto& t : m.trees()) {
    auto nodes = internal::json::array();
    for (const auto& n : t.nodes()) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

TreeEnsemble ensemble_from_json(std::string_view text) {
  auto j = internal::parse_json_document(text, "paramselect model");
  internal::check_version(j, kParamSelectFormatVersion, "paramselect model");
  return internal::guarded_parse("paramselect model", [&] {
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (!std::equal(names.begin(), names.end(), FeatureVector::kNames.begin(),
                    FeatureVector::kNames.end())) {
      throw Error(ErrorCode::kCorruptFile, "paramselect model: unexpected feature names");
    }
    TreeConfig cfg;
    cfg.n_trees = j.at("n_trees").get<std::size_t>();
    cfg.max_depth = j.at("max_depth").get<std::size_t>();
    cfg.max_features = j.at("max_features").get<std::size_t>();
    cfg.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    std::vector<RegressionTree> trees;
    for (const auto& tj : j.at("trees")) {
      std::vector<RegressionTree::Node> nodes;
      for (const auto& nj : tj) {
        nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(),
                         nj.at(3).get<int>(), nj.at(4).get<double>()});
      }
      trees.emplace_back(std::move(nodes));
    }
    if (trees.size() != cfg.n_trees) {
      throw Error(ErrorCode::kCorruptFile, "paramselect model: tree count mismatch");
    }
    return TreeEnsemble(std::move(trees), cfg);
  });
}

void save_ensemble(const TreeEnsemble& m, const std::string& path) {
  internal::write_text_file(path, ensemble_to_json(m));
}

TreeEnsemble load_ensemble(const std::string& path) {
  return ensemble_from_json(internal::read_text_file(path));
}

void write_samples_csv(std::ostream& out, std::span<const ParamSample> samples) {
  out << "n,epsilon,inv_ne,inv_sqrt_ne,entropy,rho_label\n";
  for (const auto& s : samples) {
    for (double v : s.features.values()) out << format_double(v) << ',';
    out << format_double(s.label) << '\n';
  }
}

std::vector<ParamSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      internal::trim(line) != "n,epsilon,inv_ne,inv_sqrt_ne,entropy,rho_label") {
    throw Error(ErrorCode::kParseError,
                "line 1: expected header n,epsilon,inv_ne,inv_sqrt_ne,entropy,rho_label");
  }
  std::vector<ParamSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::is_blank(line)) continue;
    const auto fields = internal::split_fields(line);
    std::array<double, 6> v{};
    bool ok = fields.size() == 6;
    for (std::size_t i = 0; ok && i < 6; ++i) {
      auto parsed = internal::parse_double(fields[i]);
      ok = parsed.has_value();
      if (ok) v[i] = *parsed;
    }
    if (!ok) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": invalid sample");
    }
    out.push_back({{v[0], v[1], v[2], v[3], v[4]}, v[5]});
  }
  return out;
}

}  // namespace snh
