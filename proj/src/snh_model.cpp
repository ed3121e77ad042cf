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

#include "snh/snh_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

#include "json_io.hpp"

namespace snh {

namespace fs = std::filesystem;

std::string_view scaling_mode_name(ScalingMode mode) {
  return mode == ScalingMode::kArea ? "area" : "linear";
}

ScalingMode parse_scaling_mode(std::string_view name) {
  if (name == "area") return ScalingMode::kArea;
  if (name == "linear") return ScalingMode::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "scaling mode must be 'area' or 'linear'");
}

SnhModel::SnhModel(SnhMeta meta, SizeLadder ladder, std::vector<Mlp> models,
                   ScalingMode scaling, std::vector<Normalization> norms)
    : meta_(meta),
      ladder_(std::move(ladder)),
      models_(std::move(models)),
      scaling_(scaling),
      norms_(std::move(norms)) {
  if (models_.size() != ladder_.k()) {
    throw Error(ErrorCode::kInvalidArgument, "need exactly one network per ladder size");
  }
  if (norms_.empty()) {
    norms_.assign(models_.size(), Normalization{meta_.region.side(),
                                                static_cast<double>(std::max<std::size_t>(meta_.n, 1))});
  }
  if (norms_.size() != models_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need exactly one normalization per network");
  }
  for (const auto& nm : norms_) {
    if (!(nm.input_scale > 0.0) || !(nm.label_scale > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "normalization scales must be positive");
    }
  }
}

double label_scale_for(std::span<const double> labels, double psi) {
  double sum = 0.0;
  for (double y : labels) sum += std::abs(y);
  const double mean = labels.empty() ? 0.0 : sum / static_cast<double>(labels.size());
  return std::max(psi, mean);
}

double SnhModel::answer_unclamped(const RangeQuery& q) const {
  const std::size_t i = ladder_.nearest(q.size());
  const double ratio = q.size() / ladder_.size(i);
  const double scale = scaling_ == ScalingMode::kArea ? ratio * ratio : ratio;
  const auto& norm = norms_[i];
  const double raw = models_[i].forward(q.corner().x / norm.input_scale,
                                        q.corner().y / norm.input_scale);
  return scale * norm.denormalize_label(raw);
}

double SnhModel::answer(const RangeQuery& q) const {
  return std::max(0.0, answer_unclamped(q));
}

namespace {

// Runs task(i) for i in [0, count) on up to `threads` workers.
template <class Task>
void parallel_for(std::size_t count, std::size_t threads, Task task) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

SnhModel train_from_histogram(const NoisyHistogram& h, const FitConfig& cfg,
                              std::span<const RangeQuery> workload, FitReport* report) {
  const SizeLadder ladder(cfg.ladder.l, cfg.ladder.u, cfg.ladder.k);
  if (!(cfg.psi_fraction > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "psi fraction must be positive");
  }
  const AugmentedSet aug = augment(h, ladder);
  const WorkloadWeights weights =
      workload.empty() ? uniform_weights(aug) : workload_weights(aug, workload);

  const double n_eff = static_cast<double>(std::max<std::size_t>(h.n(), 1));
  const double psi = cfg.psi_fraction * n_eff;
  TrainConfig base = cfg.train;
  base.psi = psi;
  base.normalization = {h.grid().region().side(), n_eff};
  base.validate();

  std::vector<std::optional<Mlp>> models(ladder.k());
  std::vector<Normalization> norms(ladder.k());
  std::vector<double> first(ladder.k()), last(ladder.k());
  parallel_for(ladder.k(), cfg.threads, [&](std::size_t s) {
    std::vector<TrainingSample> samples(aug.queries_per_size());
    const auto labels = aug.labels(s);
    const auto w = weights.weights(s);
    for (std::size_t c = 0; c < samples.size(); ++c) {
      const auto corner = aug.grid().corner(c);
      samples[c] = {corner.x, corner.y, labels[c], static_cast<double>(w[c])};
    }
    TrainConfig tc = base;
    tc.normalization.label_scale = label_scale_for(labels, psi);
    norms[s] = tc.normalization;
    tc.seed = derive_seed(cfg.seed, "train", s);
    auto result = train(samples, tc);
    first[s] = result.first_epoch_loss;
    last[s] = result.final_loss;
    models[s].emplace(std::move(result.model));
  });

  std::vector<Mlp> bank;
  bank.reserve(models.size());
  for (auto& m : models) bank.push_back(std::move(*m));
  if (report) {
    report->first_epoch_loss = std::move(first);
    report->final_loss = std::move(last);
  }
  SnhMeta meta{h.grid().region(), h.grid().rho(), h.epsilon(), h.n(), psi, cfg.seed};
  return SnhModel(meta, ladder, std::move(bank), cfg.scaling, std::move(norms));
}

namespace detail {

FitOutput fit_with_noise(AuditedDataset& data, const FitConfig& cfg,
                         std::span<const RangeQuery> workload,
                         const std::function<double()>& noise) {
  if (!(cfg.rho > 0.0) || cfg.rho > data.region().side()) {
    throw Error(ErrorCode::kInvalidArgument,
                "rho must lie in (0, region side], got " + format_double(cfg.rho));
  }
  // Validate everything cheap before spending the budget.
  SizeLadder(cfg.ladder.l, cfg.ladder.u, cfg.ladder.k);
  TrainConfig probe = cfg.train;
  probe.psi = 1.0;
  probe.normalization = {};
  probe.validate();

  FitReport report;
  auto counted = [&] {
    ++report.noise_draws;
    return noise();
  };
  NoisyHistogram h = collect_with_noise(data, cfg.rho, cfg.epsilon, counted);
  SnhModel model = train_from_histogram(h, cfg, workload, &report);
  report.audit = data.audit();
  return FitOutput{std::move(model), std::move(h), std::move(report)};
}

}  // namespace detail

FitOutput fit(AuditedDataset& data, const FitConfig& cfg, std::span<const RangeQuery> workload) {
  Rng rng(derive_seed(cfg.seed, "collect"));
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  const double scale = 1.0 / cfg.epsilon;
  return detail::fit_with_noise(data, cfg, workload, [&] { return laplace_sample(scale, rng); });
}

FitOutput fit(const PlanarDataset& data, const FitConfig& cfg,
              std::span<const RangeQuery> workload) {
  AuditedDataset audited(data);
  return fit(audited, cfg, workload);
}

// --- bundle ---------------------------------------------------------------

namespace {

std::string weight_file_name(std::size_t i, WeightFormat f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "model_%03zu.%s", i, f == WeightFormat::kBinary ? "bin" : "json");
  return buf;
}

}  // namespace

void save_model(const SnhModel& m, const std::string& dir, WeightFormat format) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());

  internal::json manifest;
  manifest["version"] = kBundleFormatVersion;
  manifest["kind"] = "snh-bundle";
  manifest["region"] = internal::region_to_json(m.meta().region);
  manifest["rho"] = m.meta().rho;
  manifest["epsilon"] = m.meta().epsilon;
  manifest["n"] = m.meta().n;
  manifest["psi"] = m.meta().psi;
  manifest["seed"] = m.meta().seed;
  manifest["scaling"] = scaling_mode_name(m.scaling());
  manifest["ladder"] = {{"l", m.ladder().lower()},
                        {"u", m.ladder().upper()},
                        {"k", m.ladder().k()},
                        {"sizes", std::vector<double>(m.ladder().sizes().begin(),
                                                      m.ladder().sizes().end())}};
  manifest["architecture"] = {{"depth", m.models()[0].depth()},
                              {"width", m.models()[0].width()},
                              {"activation", "relu"}};
  manifest["weight_format"] = format == WeightFormat::kBinary ? "binary-f64" : "json";
  auto files = internal::json::array();
  for (std::size_t i = 0; i < m.models().size(); ++i) {
    const auto name = weight_file_name(i, format);
    const auto& norm = m.normalization(i);
    const auto bytes = format == WeightFormat::kBinary ? mlp_to_binary(m.models()[i], norm)
                                                       : mlp_to_json(m.models()[i], norm);
    internal::write_text_file((fs::path(dir) / name).string(), bytes);
    files.push_back({{"index", i},
                     {"size", m.ladder().size(i)},
                     {"file", name},
                     {"normalization",
                      {{"input_scale", norm.input_scale}, {"label_scale", norm.label_scale}}}});
  }
  manifest["models"] = std::move(files);
  internal::write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2));
}

void save_bundle(const FitOutput& fit, const std::string& dir, WeightFormat format) {
  save_model(fit.model, dir, format);
  save_histogram(fit.histogram, (fs::path(dir) / "histogram.json").string());
  const auto& a = fit.report.audit;
  internal::json audit = {{"point_reads", a.point_reads},
                          {"post_collection_reads", a.post_collection_reads},
                          {"out_of_band_accesses", a.out_of_band_accesses},
                          {"compliant", a.compliant()},
                          {"noise_draws", fit.report.noise_draws},
                          {"cells", fit.histogram.grid().cell_count()},
                          {"first_epoch_loss", fit.report.first_epoch_loss},
                          {"final_loss", fit.report.final_loss}};
  internal::write_text_file((fs::path(dir) / "audit.json").string(), audit.dump(2));
}

SnhModel load_model(const std::string& dir) {
  const auto manifest_path = (fs::path(dir) / "manifest.json").string();
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kIoError, "no manifest.json in " + dir);
  }
  auto j = internal::parse_json_document(internal::read_text_file(manifest_path), "manifest");
  internal::check_version(j, kBundleFormatVersion, "manifest");
  return internal::guarded_parse("manifest", [&] {
    const std::string wf = j.at("weight_format").get<std::string>();
    if (wf != "binary-f64" && wf != "json") {
      throw Error(ErrorCode::kCorruptFile, "manifest: unknown weight format " + wf);
    }
    SnhMeta meta{internal::region_from_json(j.at("region")), j.at("rho").get<double>(),
                 j.at("epsilon").get<double>(), j.at("n").get<std::size_t>(),
                 j.at("psi").get<double>(), j.at("seed").get<std::uint64_t>()};
    const auto& lj = j.at("ladder");
    SizeLadder ladder(lj.at("l").get<double>(), lj.at("u").get<double>(),
                      lj.at("k").get<std::size_t>());
    std::vector<Mlp> models;
    std::vector<Normalization> norms;
    const auto& files = j.at("models");
    if (files.size() != ladder.k()) {
      throw Error(ErrorCode::kCorruptFile, "manifest: model count does not match ladder");
    }
    for (const auto& f : files) {
      const auto bytes =
          internal::read_text_file((fs::path(dir) / f.at("file").get<std::string>()).string());
      auto [mlp, norm] = wf == "binary-f64" ? mlp_from_binary(bytes) : mlp_from_json(bytes);
      models.push_back(std::move(mlp));
      norms.push_back(norm);
    }
    SnhModel model(meta, ladder, std::move(models),
                   parse_scaling_mode(j.at("scaling").get<std::string>()), std::move(norms));
    return model;
  });
}

}  // namespace snh
