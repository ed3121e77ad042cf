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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snh/augment.hpp"
#include "snh/baselines.hpp"
#include "snh/dp_collect.hpp"
#include "snh/error.hpp"
#include "snh/eval.hpp"
#include "snh/geo.hpp"
#include "snh/paramselect.hpp"
#include "snh/snh_model.hpp"

namespace snh::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDataDirEnv = "SNH_DATA_DIR";

// Relative paths resolve against $SNH_DATA_DIR when it is set.
std::string resolve(const std::string& path) {
  if (path.empty() || path == "-" || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir != '\0') {
    return (fs::path(dir) / path).string();
  }
  return path;
}

PlanarDataset load_dataset(const std::string& path) {
  const auto p = resolve(path);
  if (p.empty() || !fs::exists(p)) {
    throw Error(ErrorCode::kDatasetNotFound, "dataset not found: " + (p.empty() ? "<none>" : p));
  }
  return read_planar_csv_file(p);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(resolve(path));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

// Opens `path` for writing, or returns nullptr for stdout ("-" or empty).
std::unique_ptr<std::ofstream> open_out(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;
  auto f = std::make_unique<std::ofstream>(resolve(path));
  if (!*f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return f;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, std::string("invalid ") + what + " value: " + tok);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, std::string("empty ") + what + " list");
  return out;
}

// Training and ladder flags shared by fit, eval, sweep and paramselect-train.
struct TrainFlags {
  double l = 25.0;
  double u = 100.0;
  std::size_t k = 8;
  std::size_t depth = 20;
  std::size_t width = 80;
  std::size_t epochs = 2000;
  std::size_t batch = 0;
  std::size_t max_steps = 0;
  double lr = 1e-3;
  double psi_fraction = 0.001;
  std::string scaling = "area";
  std::size_t threads = 0;
  bool keep_best = true;

  void add_to(CLI::App* app) {
    app->add_option("--l", l, "Smallest expected query size (m)")->capture_default_str();
    app->add_option("--u", u, "Largest expected query size (m)")->capture_default_str();
    app->add_option("--k", k, "Number of training query sizes")->capture_default_str();
    app->add_option("--depth", depth, "Hidden layers per network")->capture_default_str();
    app->add_option("--width", width, "Units per hidden layer")->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch", batch, "Minibatch size (0 = auto)")->capture_default_str();
    app->add_option("--max-steps", max_steps, "Optimizer step cap (0 = none)")
        ->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--psi-fraction", psi_fraction, "Loss/metric floor as a fraction of n")
        ->capture_default_str();
    app->add_option("--scaling", scaling, "Size extrapolation: area | linear")
        ->capture_default_str();
    app->add_option("--threads", threads, "Training threads (0 = all cores)")
        ->capture_default_str();
    app->add_option("--keep-best", keep_best, "Keep the lowest-loss parameters seen")
        ->capture_default_str();
  }

  FitConfig to_fit_config(double epsilon, double rho, std::uint64_t seed) const {
    FitConfig cfg;
    cfg.epsilon = epsilon;
    cfg.rho = rho;
    cfg.ladder = {l, u, k};
    cfg.train.depth = depth;
    cfg.train.width = width;
    cfg.train.epochs = epochs;
    cfg.train.batch_size = batch;
    cfg.train.max_steps = max_steps;
    cfg.train.adam.learning_rate = lr;
    cfg.train.keep_best = keep_best;
    cfg.psi_fraction = psi_fraction;
    cfg.scaling = parse_scaling_mode(scaling);
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  }

  // Everything checkable before touching data.
  void validate() const {
    SizeLadder(l, u, k);
    parse_scaling_mode(scaling);
    if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
    if (depth > 0 && width < 1) throw Error(ErrorCode::kInvalidArgument, "width must be >= 1");
    if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr must be positive");
    if (!(psi_fraction > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "psi-fraction must be positive");
    }
  }

  json echo() const {
    return {{"l", l},           {"u", u},
            {"k", k},           {"depth", depth},
            {"width", width},   {"epochs", epochs},
            {"batch", batch},   {"max_steps", max_steps},
            {"lr", lr},         {"psi_fraction", psi_fraction},
            {"scaling", scaling}, {"threads", threads},
            {"keep_best", keep_best}};
  }
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be positive");
}

// Cell width from "--rho": meters, "ug", or "paramselect".
struct RhoSpec {
  std::string text = "paramselect";
  std::string paramselect_model;
  std::string public_dataset;

  void add_to(CLI::App* app) {
    app->add_option("--rho", text, "Cell width in meters, 'ug', or 'paramselect'")
        ->capture_default_str();
    app->add_option("--paramselect-model", paramselect_model, "ParamSelect model JSON");
    app->add_option("--public-dataset", public_dataset,
                    "Public planar dataset over the same region (ParamSelect features)");
  }

  void validate() const {
    if (text == "paramselect") {
      if (paramselect_model.empty()) {
        throw Error(ErrorCode::kParamSelectModelRequired,
                    "--rho paramselect needs --paramselect-model");
      }
      if (public_dataset.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--rho paramselect needs --public-dataset");
      }
    } else if (text != "ug") {
      require_positive(parse_list(text, "rho").front(), "rho");
    }
  }

  double resolve_for(const Region& region, std::size_t n, double epsilon) const {
    if (text == "ug") return region.side() / static_cast<double>(ug_granularity(n, epsilon));
    if (text == "paramselect") {
      const auto model = load_ensemble(resolve(paramselect_model));
      const auto d_star = load_dataset(public_dataset);
      const double rho = predict_rho(model, region, d_star, n, epsilon);
      return std::clamp(rho, region.side() / 4096.0, region.side());
    }
    return parse_list(text, "rho").front();
  }
};

// --- commands ---------------------------------------------------------------

struct IngestCmd {
  std::string input, output;
  double lat = 0.0, lon = 0.0, side = 20000.0;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("ingest", "Project a lat,lon CSV into a planar dataset");
    c->add_option("--input", input, "CSV with lat,lon columns")->required();
    c->add_option("--center-lat", lat, "Region center latitude")->required();
    c->add_option("--center-lon", lon, "Region center longitude")->required();
    c->add_option("--side", side, "Region side in meters")->capture_default_str();
    c->add_option("--output", output, "Planar dataset output")->required();
    c->callback([this, &action, &out] {
      action = [this, &out] {
        Region region(GeoPoint(lat, lon), side);
        const auto p = resolve(input);
        if (!fs::exists(p)) throw Error(ErrorCode::kDatasetNotFound, "dataset not found: " + p);
        const auto d = read_geo_csv_file(p, region);
        write_planar_csv_file(resolve(output), d);
        json j = {{"command", "ingest"},
                  {"config", {{"input", input}, {"output", output}, {"center_lat", lat},
                              {"center_lon", lon}, {"side", side}}},
                  {"result", {{"n", d.size()}, {"dropped_outside_region", d.dropped()}}}};
        out << j.dump(2) << '\n';
      };
    });
  }
};

struct SynthCmd {
  std::string kind = "uniform", output, workload_output, centers = "region";
  std::size_t n = 10000, components = 5, queries = 5000;
  double side = 2000.0, lat = 0.0, lon = 0.0, sigma_lo = 0.02, sigma_hi = 0.08;
  double l = 25.0, u = 100.0;
  std::uint64_t seed = 0;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("synth", "Generate a synthetic planar dataset (and workload)");
    c->add_option("--kind", kind, "uniform | gaussian-mixture")->capture_default_str();
    c->add_option("--n", n, "Number of points")->capture_default_str();
    c->add_option("--side", side, "Region side in meters")->capture_default_str();
    c->add_option("--center-lat", lat, "Region center latitude")->capture_default_str();
    c->add_option("--center-lon", lon, "Region center longitude")->capture_default_str();
    c->add_option("--components", components, "Mixture components")->capture_default_str();
    c->add_option("--sigma-lo", sigma_lo, "Min component sigma / side")->capture_default_str();
    c->add_option("--sigma-hi", sigma_hi, "Max component sigma / side")->capture_default_str();
    c->add_option("--seed", seed, "Seed")->capture_default_str();
    c->add_option("--output", output, "Planar dataset output")->required();
    c->add_option("--workload-output", workload_output, "Also write a query workload CSV");
    c->add_option("--queries", queries, "Workload size")->capture_default_str();
    c->add_option("--centers", centers, "Workload centers: region | records")
        ->check(CLI::IsMember({"region", "records"}))
        ->capture_default_str();
    c->add_option("--l", l, "Smallest query size")->capture_default_str();
    c->add_option("--u", u, "Largest query size")->capture_default_str();
    c->callback([this, &action, &out] {
      action = [this, &out] {
        Region region(GeoPoint(lat, lon), side);
        const auto k = parse_synthetic_kind(kind);
        const auto d =
            k == SyntheticKind::kUniform
                ? gen_uniform(n, region, derive_seed(seed, "synth"))
                : gen_mixture(n, region,
                              random_mixture(region, components, derive_seed(seed, "mixture"),
                                             sigma_lo, sigma_hi),
                              derive_seed(seed, "synth"));
        write_planar_csv_file(resolve(output), d);
        if (!workload_output.empty()) {
          const auto ws = derive_seed(seed, "workload");
          const auto w = centers == "records" ? gen_workload_at_records(d, queries, l, u, ws)
                                              : gen_workload(region, queries, l, u, ws);
          auto f = open_out(workload_output);
          write_queries_csv(*f, w.queries);
        }
        json j = {{"command", "synth"},
                  {"config", {{"kind", kind}, {"n", n}, {"side", side}, {"center_lat", lat},
                              {"center_lon", lon}, {"components", components},
                              {"sigma_lo", sigma_lo}, {"sigma_hi", sigma_hi}, {"seed", seed},
                              {"output", output}, {"workload_output", workload_output},
                              {"queries", queries}, {"centers", centers}, {"l", l}, {"u", u}}},
                  {"result", {{"n", d.size()}, {"entropy", entropy(d)}}}};
        out << j.dump(2) << '\n';
      };
    });
  }
};

struct FitCmd {
  std::string dataset, workload, output;
  std::string weight_format = "binary";
  double epsilon = 0.2;
  std::uint64_t seed = 0;
  TrainFlags train;
  RhoSpec rho;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("fit", "Collect a noisy grid and train the network bank");
    c->add_option("--dataset", dataset, "Sensitive planar dataset")->required();
    c->add_option("--epsilon", epsilon, "Privacy budget")->capture_default_str();
    c->add_option("--workload", workload, "Workload queries CSV (cx,cy,r) for loss weights");
    c->add_option("--seed", seed, "Root seed")->capture_default_str();
    c->add_option("--output", output, "Model bundle directory")->required();
    c->add_option("--weight-format", weight_format, "binary | json")->capture_default_str();
    rho.add_to(c);
    train.add_to(c);
    c->callback([this, &action, &out] {
      action = [this, &out] { run(out); };
    });
  }

  void run(std::ostream& out) {
    require_positive(epsilon, "epsilon");
    train.validate();
    rho.validate();
    if (weight_format != "binary" && weight_format != "json") {
      throw Error(ErrorCode::kInvalidArgument, "weight-format must be binary or json");
    }
    const auto d = load_dataset(dataset);
    std::vector<RangeQuery> qw;
    if (!workload.empty()) qw = read_queries_csv_file(resolve(workload));
    const double cell = rho.resolve_for(d.region(), d.size(), epsilon);
    const auto cfg = train.to_fit_config(epsilon, cell, seed);

    AuditedDataset audited(d);
    const auto fitted = fit(audited, cfg, qw);
    const auto dir = resolve(output);
    save_bundle(fitted, dir,
                weight_format == "binary" ? WeightFormat::kBinary : WeightFormat::kJson);

    json config = {{"dataset", dataset},
                   {"epsilon", epsilon},
                   {"rho", rho.text},
                   {"rho_resolved", cell},
                   {"paramselect_model", rho.paramselect_model},
                   {"public_dataset", rho.public_dataset},
                   {"workload", workload},
                   {"seed", seed},
                   {"output", output},
                   {"weight_format", weight_format},
                   {"train", train.echo()}};
    write_json_file((fs::path(dir) / "config.json").string(), config);
    const auto& a = fitted.report.audit;
    json j = {{"command", "fit"},
              {"config", config},
              {"result",
               {{"n", d.size()},
                {"cells", fitted.histogram.grid().cell_count()},
                {"models", fitted.model.models().size()},
                {"audit",
                 {{"point_reads", a.point_reads},
                  {"post_collection_reads", a.post_collection_reads},
                  {"compliant", a.compliant()}}}}}};
    out << j.dump(2) << '\n';
  }
};

struct AnswerCmd {
  std::string model, queries, output;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("answer", "Answer a CSV of queries with a model bundle");
    c->add_option("--model", model, "Model bundle directory")->required();
    c->add_option("--queries", queries, "Queries CSV (cx,cy,r)")->required();
    c->add_option("--output", output, "Output CSV (default stdout)");
    c->callback([this, &action, &out] {
      action = [this, &out] {
        const auto m = load_model(resolve(model));
        const auto qs = read_queries_csv_file(resolve(queries));
        auto f = open_out(output);
        std::ostream& dst = f ? *f : out;
        dst << "cx,cy,r,answer\n";
        for (const auto& q : qs) {
          dst << format_double(q.corner().x) << ',' << format_double(q.corner().y) << ','
              << format_double(q.size()) << ',' << format_double(m.answer(q)) << '\n';
        }
      };
    });
  }
};

struct EvalCmd {
  std::string dataset, model, method = "snh", workload, report, summary;
  double epsilon = 0.2, l = 25.0, u = 100.0, psi = 0.0;
  std::size_t queries = 5000;
  std::uint64_t seed = 0;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("eval", "Evaluate a model (or the UG baseline) on a workload");
    c->add_option("--dataset", dataset, "Planar dataset used for truth counts")->required();
    c->add_option("--method", method, "snh | ug")->capture_default_str();
    c->add_option("--model", model, "Model bundle (method snh)");
    c->add_option("--epsilon", epsilon, "Budget for the UG baseline")->capture_default_str();
    c->add_option("--workload", workload, "Query CSV; generated when omitted");
    c->add_option("--queries", queries, "Generated workload size")->capture_default_str();
    c->add_option("--l", l, "Smallest generated size")->capture_default_str();
    c->add_option("--u", u, "Largest generated size")->capture_default_str();
    c->add_option("--psi", psi, "Metric floor (default 0.001 n)");
    c->add_option("--seed", seed, "Seed")->capture_default_str();
    c->add_option("--report", report, "Per-query CSV output");
    c->add_option("--summary", summary, "JSON summary output (default stdout)");
    c->callback([this, &action, &out] {
      action = [this, &out] { run(out); };
    });
  }

  void run(std::ostream& out) {
    if (method != "snh" && method != "ug") {
      throw Error(ErrorCode::kInvalidArgument, "method must be snh or ug");
    }
    if (method == "snh" && model.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "method snh needs --model");
    }
    if (method == "ug") require_positive(epsilon, "epsilon");
    const auto d = load_dataset(dataset);
    std::vector<RangeQuery> qs =
        workload.empty()
            ? gen_workload(d.region(), queries, l, u, derive_seed(seed, "eval-workload")).queries
            : read_queries_csv_file(resolve(workload));
    const double floor = psi > 0.0 ? psi : std::max(default_psi(d.size()), 1e-3);

    EvalReport rep;
    if (method == "snh") {
      const auto m = load_model(resolve(model));
      rep = evaluate([&](const RangeQuery& q) { return m.answer(q); }, qs, d, floor);
    } else {
      AuditedDataset audited(d);
      Rng rng(derive_seed(seed, "ug"));
      const auto ug = uniform_grid(audited, epsilon, rng);
      rep = evaluate([&](const RangeQuery& q) { return ug.answer(q); }, qs, d, floor);
    }
    rep.config = {{"dataset", dataset}, {"method", method}, {"model", model},
                  {"epsilon", format_double(epsilon)}, {"workload", workload},
                  {"queries", std::to_string(qs.size())}, {"seed", std::to_string(seed)},
                  {"l", format_double(l)}, {"u", format_double(u)}};
    if (!report.empty()) {
      auto f = open_out(report);
      write_report_csv(*f, rep);
    }
    const auto text = report_summary_json(rep);
    if (summary.empty()) {
      out << text << '\n';
    } else {
      auto f = open_out(summary);
      *f << text << '\n';
    }
  }
};

struct SweepCmd {
  std::string dataset, workload, output, methods = "snh,ug";
  std::string epsilons = "0.05,0.1,0.2,0.4,0.8", seeds = "0";
  std::size_t queries = 1000;
  std::uint64_t seed = 0;
  TrainFlags train;
  RhoSpec rho;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("sweep", "Error vs. epsilon sweep, long-format CSV");
    c->add_option("--dataset", dataset, "Planar dataset")->required();
    c->add_option("--epsilons", epsilons, "Comma-separated budgets")->capture_default_str();
    c->add_option("--seeds", seeds, "Comma-separated run seeds")->capture_default_str();
    c->add_option("--methods", methods, "Comma-separated: snh, ug")->capture_default_str();
    c->add_option("--workload", workload, "Workload CSV for SNH loss weights");
    c->add_option("--queries", queries, "Evaluation queries")->capture_default_str();
    c->add_option("--seed", seed, "Root seed")->capture_default_str();
    c->add_option("--output", output, "Results CSV (default stdout)");
    rho.add_to(c);
    train.add_to(c);
    c->callback([this, &action, &out] {
      action = [this, &out] { run(out); };
    });
  }

  void run(std::ostream& out) {
    const auto eps_list = parse_list(epsilons, "epsilon");
    const auto seed_list = parse_list(seeds, "seed");
    for (double e : eps_list) require_positive(e, "epsilon");
    std::vector<std::string> method_list;
    {
      std::stringstream ss(methods);
      std::string m;
      while (std::getline(ss, m, ',')) {
        if (m != "snh" && m != "ug") {
          throw Error(ErrorCode::kInvalidArgument, "unknown method " + m);
        }
        method_list.push_back(m);
      }
    }
    train.validate();
    const auto d = load_dataset(dataset);
    std::vector<RangeQuery> qw;
    if (!workload.empty()) qw = read_queries_csv_file(resolve(workload));
    const auto eval_q =
        gen_workload(d.region(), queries, train.l, train.u, derive_seed(seed, "sweep-eval"));
    const double psi = std::max(default_psi(d.size()), 1e-3);

    auto f = open_out(output);
    std::ostream& dst = f ? *f : out;
    dst << "method,epsilon,seed,aggregate,value,status,message\n";
    for (const auto& method : method_list) {
      for (double eps : eps_list) {
        for (double sv : seed_list) {
          const auto run_seed = derive_seed(seed, "sweep-run", static_cast<std::uint64_t>(sv));
          auto row_prefix = method + ',' + format_double(eps) + ',' + format_double(sv) + ',';
          try {
            ErrorSummary s;
            if (method == "snh") {
              rho.validate();
              const double cell = rho.resolve_for(d.region(), d.size(), eps);
              const auto fitted = fit(d, train.to_fit_config(eps, cell, run_seed), qw);
              s = evaluate([&](const RangeQuery& q) { return fitted.model.answer(q); },
                           eval_q.queries, d, psi)
                      .summary;
            } else {
              AuditedDataset audited(d);
              Rng rng(derive_seed(run_seed, "ug"));
              const auto ug = uniform_grid(audited, eps, rng);
              s = evaluate([&](const RangeQuery& q) { return ug.answer(q); }, eval_q.queries, d,
                           psi)
                      .summary;
            }
            dst << row_prefix << "mean," << format_double(s.mean) << ",ok,\n";
            dst << row_prefix << "median," << format_double(s.median) << ",ok,\n";
            dst << row_prefix << "p90," << format_double(s.p90) << ",ok,\n";
          } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            dst << row_prefix << "median,,error," << msg << '\n';
          }
        }
      }
    }
  }
};

struct ParamSelectTrainCmd {
  std::vector<std::string> datasets;
  std::string samples_in, samples_out, output, epsilons = "0.05,0.1,0.2,0.4,0.8";
  std::size_t ladder_steps = 16, eval_queries = 1000, n_trees = 150, max_depth = 7;
  std::uint64_t seed = 0;
  TrainFlags train;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("paramselect-train",
                                 "Search best cell widths on public data and fit the regressor");
    c->add_option("--public-datasets", datasets, "Public planar datasets");
    c->add_option("--samples", samples_in, "Use an existing training-sample CSV instead");
    c->add_option("--samples-output", samples_out, "Write the training samples CSV");
    c->add_option("--epsilons", epsilons, "Comma-separated budgets")->capture_default_str();
    c->add_option("--ladder-steps", ladder_steps, "Candidate cell widths per search")
        ->capture_default_str();
    c->add_option("--eval-queries", eval_queries, "Queries per search evaluation")
        ->capture_default_str();
    c->add_option("--n-trees", n_trees, "Trees in the ensemble")->capture_default_str();
    c->add_option("--max-depth", max_depth, "Maximum tree depth")->capture_default_str();
    c->add_option("--seed", seed, "Root seed")->capture_default_str();
    c->add_option("--output", output, "ParamSelect model JSON")->required();
    train.add_to(c);
    c->callback([this, &action, &out] {
      action = [this, &out] { run(out); };
    });
  }

  void run(std::ostream& out) {
    std::vector<ParamSample> samples;
    if (!samples_in.empty()) {
      std::ifstream in(resolve(samples_in));
      if (!in) throw Error(ErrorCode::kDatasetNotFound, "samples not found: " + samples_in);
      samples = read_samples_csv(in);
    } else {
      if (datasets.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "need --public-datasets or --samples");
      }
      train.validate();
      TrainingSetConfig cfg;
      cfg.epsilons = parse_list(epsilons, "epsilon");
      cfg.ladder_steps = ladder_steps;
      cfg.eval_queries = eval_queries;
      cfg.fit = train.to_fit_config(0.1, 1.0, seed);
      std::vector<PlanarDataset> ds;
      for (const auto& p : datasets) ds.push_back(load_dataset(p));
      samples = build_training_set(ds, cfg);
    }
    if (!samples_out.empty()) {
      auto f = open_out(samples_out);
      write_samples_csv(*f, samples);
    }
    TreeConfig tc;
    tc.n_trees = n_trees;
    tc.max_depth = max_depth;
    tc.seed = derive_seed(seed, "paramselect");
    const auto model = fit_ensemble(samples, tc);
    save_ensemble(model, resolve(output));
    json j = {{"command", "paramselect-train"},
              {"config", {{"public_datasets", datasets}, {"samples", samples_in},
                          {"epsilons", epsilons}, {"ladder_steps", ladder_steps},
                          {"eval_queries", eval_queries}, {"n_trees", n_trees},
                          {"max_depth", max_depth}, {"seed", seed}, {"train", train.echo()}}},
              {"result", {{"samples", samples.size()}, {"output", output}}}};
    out << j.dump(2) << '\n';
  }
};

struct ParamSelectPredictCmd {
  std::string model, public_dataset;
  std::size_t n = 0;
  double epsilon = 0.2;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* c = app.add_subcommand("paramselect-predict", "Predict a cell width");
    c->add_option("--model", model, "ParamSelect model JSON")->required();
    c->add_option("--public-dataset", public_dataset, "Public dataset over the region")
        ->required();
    c->add_option("--n", n, "Cardinality of the sensitive dataset")->required();
    c->add_option("--epsilon", epsilon, "Privacy budget")->capture_default_str();
    c->callback([this, &action, &out] {
      action = [this, &out] {
        require_positive(epsilon, "epsilon");
        if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be positive");
        const auto m = load_ensemble(resolve(model));
        const auto d_star = load_dataset(public_dataset);
        const auto f = features(d_star, n, epsilon);
        const double rho = m.predict(f);
        json j = {{"command", "paramselect-predict"},
                  {"config", {{"model", model}, {"public_dataset", public_dataset}, {"n", n},
                              {"epsilon", epsilon}}},
                  {"result", {{"rho", rho}, {"features", f.values()}}}};
        out << j.dump(2) << '\n';
      };
    });
  }
};

struct AuditCmd {
  std::string model;
  int* exit_code = nullptr;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out, int& code) {
    exit_code = &code;
    auto* c = app.add_subcommand("audit", "Check a bundle's dataset access audit");
    c->add_option("--model", model, "Model bundle directory")->required();
    c->callback([this, &action, &out] {
      action = [this, &out] {
        const auto path = (fs::path(resolve(model)) / "audit.json").string();
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::kIoError, "no audit.json in " + model);
        json a;
        try {
          a = json::parse(in);
        } catch (const json::exception& e) {
          throw Error(ErrorCode::kCorruptFile, std::string("audit.json: ") + e.what());
        }
        const bool ok = a.value("post_collection_reads", 1) == 0 &&
                        a.value("noise_draws", 0) == a.value("cells", -1);
        json j = {{"command", "audit"},
                  {"config", {{"model", model}}},
                  {"result", {{"audit", a}, {"compliant", ok}}}};
        out << j.dump(2) << '\n';
        if (!ok) *exit_code = kExitRuntimeError;
      };
    });
  }
};

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kTrainingDiverged:
      return kExitRuntimeError;
    default:
      return kExitUserError;
  }
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  json j = {{"error", {{"code", code}, {"message", message}}}};
  err << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private spatial range counts with neural histograms"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");

  std::function<void()> action;
  int code = kExitOk;
  IngestCmd ingest;
  SynthCmd synth;
  FitCmd fit_cmd;
  AnswerCmd answer;
  EvalCmd eval;
  SweepCmd sweep;
  ParamSelectTrainCmd ps_train;
  ParamSelectPredictCmd ps_predict;
  AuditCmd audit;
  ingest.add(app, action, out);
  synth.add(app, action, out);
  fit_cmd.add(app, action, out);
  answer.add(app, action, out);
  eval.add(app, action, out);
  sweep.add(app, action, out);
  ps_train.add(app, action, out);
  ps_predict.add(app, action, out);
  audit.add(app, action, out, code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "INVALID_ARGUMENT", e.what());
    return kExitUserError;
  }

  try {
    if (action) action();
  } catch (const Error& e) {
    report_error(err, error_code_name(e.code()), e.what());
    return exit_for(e.code());
  } catch (const std::exception& e) {
    report_error(err, "RUNTIME_FAILURE", e.what());
    return kExitRuntimeError;
  }
  return code;
}

}  // namespace snh::cli
