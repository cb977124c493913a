// Copyright 2026 The coldstart Authors
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

// Command-line driver. Exit codes: 0 success, 2 usage or input error,
// 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "coldstart/error.hpp"
#include "coldstart/pipeline.hpp"
#include "coldstart/series_io.hpp"
#include "coldstart/synth.hpp"

namespace {

namespace cs = coldstart;
namespace fs = std::filesystem;
using cs::Errc;
using cs::Error;
using cs::trace::InvocationSeries;

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

std::vector<InvocationSeries> load_series(const std::string& path) {
  std::istringstream in(cs::pipeline::read_text(path));
  try {
    return cs::trace::read_series_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

const InvocationSeries& find_series(const std::vector<InvocationSeries>& all,
                                    const std::string& id) {
  if (id.empty()) {
    if (all.size() == 1) {
      return all.front();
    }
    throw Error(Errc::kBadConfig, "--function is required: the series file holds " +
                                      std::to_string(all.size()) + " functions");
  }
  for (const auto& s : all) {
    if (s.function_id == id) {
      return s;
    }
  }
  throw Error(Errc::kBadConfig, "function '" + id + "' not found");
}

std::vector<double> read_numbers(const std::string& path) {
  std::istringstream in(cs::pipeline::read_text(path));
  std::vector<double> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) {
        if (row == 1) {
          break; // header
        }
        throw Error(Errc::kParse, path + " row " + std::to_string(row) + ": '" + token + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(Errc::kParse, path + " row " + std::to_string(row) + ": non-finite '" +
                                      token + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  cs::pipeline::write_text(path, j.dump(2) + "\n");
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  bool http_only = false;
  std::string granularity = "minute";
  std::string start = "2019-07-01T00:00:00Z";
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  for (const auto& p : a.inputs) {
    if (!fs::exists(p)) {
      throw Error(Errc::kIo, "input file not found: " + p);
    }
  }
  const auto g = cs::trace::parse_granularity(a.granularity);
  auto r = cs::pipeline::ingest_day_files(a.inputs, a.http_only, cs::trace::parse_rfc3339(a.start));
  std::vector<InvocationSeries> series;
  for (const auto& s : r.series) {
    series.push_back(cs::pipeline::at_granularity(s, g));
  }
  std::ostringstream csv;
  cs::trace::write_series_csv(csv, series);
  cs::pipeline::write_text((fs::path(a.out) / "series.csv").string(), csv.str());
  nlohmann::json manifest = cs::pipeline::manifest_json(r, g, a.http_only);
  manifest["inputs"] = a.inputs;
  write_json((fs::path(a.out) / "manifest.json").string(), manifest);
  std::cout << "ingested " << r.series.size() << " functions over " << r.num_days << " days\n";
}

// --- cluster --------------------------------------------------------------

struct ClusterArgs {
  std::string series;
  double eps = 0.5;
  std::size_t min_pts = 3;
  std::string out;
};

void run_cluster(const ClusterArgs& a) {
  const auto series = load_series(a.series);
  const auto c = cs::pipeline::cluster_series(series, a.eps, a.min_pts);
  write_json(a.out, c.json);
  std::cout << c.assignment.num_clusters() << " clusters, " << c.representatives.size()
            << " representatives\n";
}

// --- train / forecast / evaluate ----------------------------------------------

struct ModelArgs {
  std::string config;
  std::size_t context = 0;
  std::size_t horizon = 0;
  std::string granularity = "hour";
  std::string target = "counts";
  double train_fraction = 0.5;
};

cs::forecaster::ModelConfig model_config(const ModelArgs& a) {
  cs::forecaster::ModelConfig cfg;
  if (!a.config.empty()) {
    cfg = cs::forecaster::config_from_json(nlohmann::json::parse(cs::pipeline::read_text(a.config)));
  } else if (a.target == "gaps") {
    cfg = cs::pipeline::ExperimentConfig().gap_model;
  } else {
    cfg = cs::pipeline::ExperimentConfig().model;
    cfg.lags_sequence = cs::forecaster::default_lags(cs::trace::parse_granularity(a.granularity));
  }
  if (a.context > 0) {
    cfg.context_length = a.context;
  }
  if (a.horizon > 0) {
    cfg.prediction_length = a.horizon;
  }
  cfg.validate();
  return cfg;
}

struct TrainArgs {
  std::string series;
  std::string function;
  std::string kind = "transformer";
  ModelArgs model;
  cs::forecaster::TrainConfig training;
  std::size_t stride = 1;
  std::size_t max_windows = 0;
  bool holdout = true;
  std::string out;
  std::string loss_csv;
};

void run_train(const TrainArgs& a) {
  const auto all = load_series(a.series);
  const auto& s = find_series(all, a.function);
  const auto cfg = model_config(a.model);
  std::vector<cs::forecaster::ForecastInput> windows;
  if (a.model.target == "gaps") {
    const auto replay = cs::pipeline::make_gap_replay(s, a.model.train_fraction, 0);
    windows = cs::pipeline::gap_windows(replay.gaps, replay.split, cfg, a.stride, a.max_windows);
  } else {
    const auto counts = cs::pipeline::at_granularity(s, cs::trace::parse_granularity(a.model.granularity));
    const std::size_t len = counts.values.size();
    const std::size_t end = a.holdout && len >= cfg.prediction_length ? len - cfg.prediction_length : len;
    windows = cs::pipeline::count_windows(counts, end, cfg, a.stride, a.max_windows);
  }
  if (windows.empty()) {
    throw Error(Errc::kSeriesTooShort, "series too short for the model's context and horizon");
  }
  auto model = cs::forecaster::make_forecaster(a.kind, cfg, a.training.seed);
  std::ostringstream loss;
  loss << "epoch,loss\n";
  cs::forecaster::train(*model, windows, a.training, [&](std::size_t e, double l) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", l);
    loss << e << ',' << buf << '\n';
  });
  if (fs::path(a.out).has_parent_path()) {
    fs::create_directories(fs::path(a.out).parent_path());
  }
  cs::forecaster::save_checkpoint(*model, a.out);
  if (!a.loss_csv.empty()) {
    cs::pipeline::write_text(a.loss_csv, loss.str());
  }
  std::cout << "trained " << a.kind << " on " << windows.size() << " windows\n";
}

struct ForecastArgs {
  std::string checkpoint;
  std::string series;
  std::string function;
  std::string granularity = "hour";
  std::string target = "counts";
  long long t0 = -1;
  cs::pipeline::ForecastSettings settings;
  std::string out;
};

void run_forecast(const ForecastArgs& a) {
  const auto model = cs::forecaster::load_checkpoint(a.checkpoint);
  const auto all = load_series(a.series);
  const auto& s = find_series(all, a.function);
  cs::forecaster::ForecastInput input;
  std::string granularity;
  std::size_t t0 = 0;
  if (a.target == "gaps") {
    const auto g = cs::trace::to_gap_series(s);
    const std::vector<double> gaps(g.gaps.begin(), g.gaps.end());
    t0 = a.t0 < 0 ? gaps.size() : static_cast<std::size_t>(a.t0);
    input = cs::forecaster::build_gap_input(std::span(gaps).first(std::min(t0, gaps.size())), t0,
                                            model->config());
    granularity = "gap";
  } else {
    const auto counts = cs::pipeline::at_granularity(s, cs::trace::parse_granularity(a.granularity));
    t0 = a.t0 < 0 ? counts.values.size() : static_cast<std::size_t>(a.t0);
    input = cs::forecaster::build_input(counts, t0, model->config());
    granularity = std::string(cs::trace::granularity_name(counts.granularity));
  }
  const auto d = model->forecast(input, a.settings.num_samples, a.settings.seed);
  write_json(a.out, cs::forecaster::forecast_to_json(d, s.function_id, t0, granularity,
                                                     a.settings.seed));
}

struct EvaluateArgs {
  std::string actual;
  std::string predicted;
  std::string model_name = "forecast";
  std::string dataset;
  std::string series;
  std::string function;
  std::string granularity = "hour";
  std::vector<std::string> checkpoints;
  std::size_t season = 0;
  cs::pipeline::ForecastSettings settings;
  std::string out;
  std::string json;
};

void run_evaluate(const EvaluateArgs& a) {
  std::vector<cs::metrics::MetricReport> reports;
  if (!a.actual.empty() || !a.predicted.empty()) {
    if (a.actual.empty() || a.predicted.empty()) {
      throw Error(Errc::kBadConfig, "--actual and --predicted go together");
    }
    reports.push_back(cs::metrics::evaluate(read_numbers(a.actual), read_numbers(a.predicted),
                                            a.model_name, a.dataset));
  } else {
    if (a.series.empty() || a.checkpoints.empty()) {
      throw Error(Errc::kBadConfig, "give --actual/--predicted or --series with --checkpoint");
    }
    const auto all = load_series(a.series);
    const auto& s = find_series(all, a.function);
    const auto counts = cs::pipeline::at_granularity(s, cs::trace::parse_granularity(a.granularity));
    std::size_t horizon = 0;
    std::vector<double> actual;
    for (const auto& path : a.checkpoints) {
      const auto model = cs::forecaster::load_checkpoint(path);
      const std::size_t h = model->config().prediction_length;
      if (horizon != 0 && h != horizon) {
        throw Error(Errc::kBadConfig, "checkpoints disagree on the horizon");
      }
      horizon = h;
      if (counts.values.size() < h) {
        throw Error(Errc::kSeriesTooShort, "series shorter than the horizon");
      }
      const std::size_t t0 = counts.values.size() - h;
      const auto input = cs::forecaster::build_input(counts, t0, model->config());
      actual = input.raw_targets();
      const auto d = model->forecast(input, a.settings.num_samples, a.settings.seed);
      reports.push_back(cs::metrics::evaluate(actual, d.point_forecast, model->kind(), s.function_id));
    }
    const std::size_t season =
        a.season > 0 ? a.season : (counts.granularity == cs::trace::Granularity::kHour ? 24 : 1440);
    const std::size_t t0 = counts.values.size() - horizon;
    if (t0 >= season) {
      const std::vector<double> history(counts.values.begin(),
                                        counts.values.begin() + static_cast<std::ptrdiff_t>(t0));
      reports.push_back(cs::metrics::evaluate(
          actual, cs::forecaster::seasonal_naive(history, season, horizon), "seasonal-naive",
          s.function_id));
    }
  }
  std::ostringstream csv;
  cs::metrics::write_reports_csv(csv, reports);
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    cs::pipeline::write_text(a.out, csv.str());
  }
  if (!a.json.empty()) {
    write_json(a.json, cs::metrics::reports_to_json(reports));
  }
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string series;
  std::vector<std::string> functions;
  std::vector<std::string> policies = {"fixed"};
  double window = 10.0;
  double quantile = 0.9;
  double safety = 1.2;
  std::string clamp = "1,240";
  int max_pool = 8;
  cs::simulator::LatencyModel latency;
  std::string gap_checkpoint;
  std::string count_checkpoint;
  std::string granularity = "hour";
  double train_fraction = 0.5;
  std::size_t limit = cs::simulator::kNormalizedInvocations;
  cs::pipeline::ForecastSettings settings;
  std::string out;
};

cs::policy::PolicySpec policy_spec(const std::string& name, const SimulateArgs& a) {
  cs::policy::PolicySpec p;
  const auto comma = a.clamp.find(',');
  if (comma == std::string::npos) {
    throw Error(Errc::kInvalidPolicy, "--clamp must be MIN,MAX");
  }
  const std::string hi = a.clamp.substr(comma + 1);
  p.min_window = std::stod(a.clamp.substr(0, comma));
  p.max_window = hi == "inf" ? cs::policy::kUnbounded : std::stod(hi);
  p.fixed_minutes = a.window;
  p.quantile = a.quantile;
  p.safety_factor = a.safety;
  p.max_pool = a.max_pool;
  if (name == "fixed") {
    p.kind = cs::policy::PolicyKind::kFixedWindow;
  } else if (name == "adaptive") {
    p.kind = cs::policy::PolicyKind::kAdaptiveWindow;
  } else if (name == "prewarm") {
    p.kind = cs::policy::PolicyKind::kPrewarm;
  } else if (name == "prewarm-adaptive") {
    p.kind = cs::policy::PolicyKind::kPrewarmPlusAdaptive;
  } else {
    p.kind = cs::policy::PolicyKind::kPerfectForesight;
    if (a.clamp == "1,240") {
      p.max_window = cs::policy::kUnbounded;
    }
  }
  p.validate();
  return p;
}

void run_simulate(const SimulateArgs& a) {
  std::vector<cs::policy::PolicySpec> specs;
  for (const auto& name : a.policies) {
    specs.push_back(policy_spec(name, a));
  }
  std::unique_ptr<cs::forecaster::Forecaster> gap_model, count_model;
  for (const auto& p : specs) {
    if (p.uses_adaptive_window() && !gap_model) {
      if (a.gap_checkpoint.empty()) {
        throw Error(Errc::kMissingForecaster, "policy " + p.label() + " needs --gap-checkpoint");
      }
      gap_model = cs::forecaster::load_checkpoint(a.gap_checkpoint);
    }
    if (p.uses_prewarm() && !count_model) {
      if (a.count_checkpoint.empty()) {
        throw Error(Errc::kMissingForecaster, "policy " + p.label() + " needs --count-checkpoint");
      }
      count_model = cs::forecaster::load_checkpoint(a.count_checkpoint);
    }
  }
  const auto all = load_series(a.series);
  std::vector<const InvocationSeries*> selected;
  if (a.functions.empty()) {
    for (const auto& s : all) {
      selected.push_back(&s);
    }
  } else {
    for (const auto& id : a.functions) {
      selected.push_back(&find_series(all, id));
    }
  }
  std::vector<cs::simulator::SimulationResult> runs;
  std::vector<cs::simulator::SummaryRow> table;
  const fs::path out(a.out);
  for (const InvocationSeries* s : selected) {
    const auto replay = cs::pipeline::make_gap_replay(*s, a.train_fraction, a.limit);
    const auto counts = cs::pipeline::at_granularity(*s, cs::trace::parse_granularity(a.granularity));
    for (std::size_t k = 0; k < specs.size(); ++k) {
      cs::simulator::ForecasterHook hook;
      if (specs[k].uses_adaptive_window()) {
        hook = cs::pipeline::gap_hook(*gap_model, replay, a.settings);
      }
      if (specs[k].uses_prewarm()) {
        auto plan = cs::pipeline::rolling_prewarm_plan(*count_model, counts, replay, specs[k],
                                                       a.settings);
        hook.prewarm_plan = [plan] { return plan; };
      }
      auto r = cs::simulator::simulate(replay.replay, specs[k], a.latency, hook, s->function_id);
      write_json((out / (cs::pipeline::file_stem(s->function_id) + "." + std::to_string(k) + ".json"))
                     .string(),
                 cs::simulator::result_to_json(r));
      table.push_back(cs::simulator::summarize(r, cs::pipeline::platform_name(specs[k])));
      runs.push_back(std::move(r));
    }
  }
  std::ostringstream csv, plot;
  cs::simulator::write_summary_csv(csv, table);
  cs::simulator::write_plot_csv(plot, runs);
  cs::pipeline::write_text((out / "table.csv").string(), csv.str());
  cs::pipeline::write_text((out / "plot.csv").string(), plot.str());
  std::cout << csv.str();
}

// --- synth ----------------------------------------------------------------

struct SynthArgs {
  cs::synth::SynthSpec spec;
  std::string pattern = "sporadic";
  std::size_t count = 1;
  std::string format = "series";
  std::string out;
};

void run_synth(SynthArgs a) {
  a.spec.pattern = cs::synth::parse_pattern(a.pattern);
  std::vector<InvocationSeries> series;
  const std::string base_id = a.spec.function_id;
  for (std::size_t k = 0; k < a.count; ++k) {
    cs::synth::SynthSpec spec = a.spec;
    spec.seed = a.spec.seed + k;
    if (!base_id.empty() && a.count > 1) {
      spec.function_id = base_id + std::to_string(k);
    }
    series.push_back(cs::synth::generate(spec));
  }
  if (a.format == "days") {
    const auto files = cs::synth::write_day_files(series, a.out);
    std::cout << "wrote " << files.size() << " day files\n";
  } else {
    std::ostringstream csv;
    cs::trace::write_series_csv(csv, series);
    cs::pipeline::write_text(a.out, csv.str());
  }
}

// --- run ------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
};

void run_run(const RunArgs& a) {
  auto cfg = cs::pipeline::load_experiment(a.config);
  if (!a.out.empty()) {
    cfg.output_dir = a.out;
  }
  const auto summary = cs::pipeline::run_experiment(cfg);
  std::cout << summary.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invocation forecasting and cold-start policy simulation"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse trace day files into canonical series");
  c_ingest->add_option("--input", ingest.inputs, "Day files in day order")->required();
  c_ingest->add_flag("--http-only", ingest.http_only, "Keep HTTP-triggered functions only");
  c_ingest->add_option("--granularity", ingest.granularity)
      ->check(CLI::IsMember({"minute", "hour"}));
  c_ingest->add_option("--start", ingest.start, "UTC start of the first day");
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();

  ClusterArgs cluster;
  auto* c_cluster = app.add_subcommand("cluster", "Cluster minute-level series by pattern");
  c_cluster->add_option("--series", cluster.series)->required();
  c_cluster->add_option("--eps", cluster.eps)->check(CLI::PositiveNumber);
  c_cluster->add_option("--min-pts", cluster.min_pts)->check(CLI::PositiveNumber);
  c_cluster->add_option("--out", cluster.out)->required();

  auto add_model_options = [](CLI::App* c, ModelArgs& m) {
    c->add_option("--model-config", m.config, "ModelConfig JSON");
    c->add_option("--context", m.context);
    c->add_option("--horizon", m.horizon);
    c->add_option("--granularity", m.granularity)->check(CLI::IsMember({"minute", "hour"}));
    c->add_option("--target", m.target)->check(CLI::IsMember({"counts", "gaps"}));
    c->add_option("--train-fraction", m.train_fraction)->check(CLI::Range(0.0, 1.0));
  };

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a forecaster and write a checkpoint");
  c_train->add_option("--series", tr.series)->required();
  c_train->add_option("--function", tr.function);
  c_train->add_option("--model", tr.kind)->check(CLI::IsMember({"transformer", "gru"}));
  add_model_options(c_train, tr.model);
  c_train->add_option("--epochs", tr.training.epochs);
  c_train->add_option("--batch-size", tr.training.batch_size)->check(CLI::PositiveNumber);
  c_train->add_option("--lr", tr.training.learning_rate)->check(CLI::NonNegativeNumber);
  c_train->add_option("--schedule", tr.training.schedule)
      ->check(CLI::IsMember({"constant", "warmupCosine"}));
  c_train->add_option("--clip-norm", tr.training.clip_norm)->check(CLI::NonNegativeNumber);
  c_train->add_option("--seed", tr.training.seed);
  c_train->add_option("--stride", tr.stride)->check(CLI::PositiveNumber);
  c_train->add_option("--max-windows", tr.max_windows);
  c_train->add_flag("!--no-holdout", tr.holdout, "Train on the final horizon too");
  c_train->add_option("--out", tr.out)->required();
  c_train->add_option("--loss-csv", tr.loss_csv);

  ForecastArgs fc;
  auto* c_forecast = app.add_subcommand("forecast", "Sample a forecast from a checkpoint");
  c_forecast->add_option("--checkpoint", fc.checkpoint)->required();
  c_forecast->add_option("--series", fc.series)->required();
  c_forecast->add_option("--function", fc.function);
  c_forecast->add_option("--granularity", fc.granularity)->check(CLI::IsMember({"minute", "hour"}));
  c_forecast->add_option("--target", fc.target)->check(CLI::IsMember({"counts", "gaps"}));
  c_forecast->add_option("--t0", fc.t0, "Forecast origin (default: series end)");
  c_forecast->add_option("--samples", fc.settings.num_samples)->check(CLI::PositiveNumber);
  c_forecast->add_option("--seed", fc.settings.seed);
  c_forecast->add_option("--out", fc.out)->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score forecasts with the six metrics");
  c_eval->add_option("--actual", ev.actual, "Actual values file");
  c_eval->add_option("--predicted", ev.predicted, "Forecast values file");
  c_eval->add_option("--model-name", ev.model_name);
  c_eval->add_option("--dataset", ev.dataset);
  c_eval->add_option("--series", ev.series);
  c_eval->add_option("--function", ev.function);
  c_eval->add_option("--granularity", ev.granularity)->check(CLI::IsMember({"minute", "hour"}));
  c_eval->add_option("--checkpoint", ev.checkpoints);
  c_eval->add_option("--season", ev.season, "Seasonal-naive period");
  c_eval->add_option("--samples", ev.settings.num_samples)->check(CLI::PositiveNumber);
  c_eval->add_option("--seed", ev.settings.seed);
  c_eval->add_option("--out", ev.out, "CSV path (default: stdout)");
  c_eval->add_option("--json", ev.json);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Replay invocations under container policies");
  c_sim->add_option("--series", sim.series, "Minute-level canonical series")->required();
  c_sim->add_option("--function", sim.functions);
  c_sim->add_option("--policy", sim.policies)
      ->check(CLI::IsMember({"fixed", "adaptive", "prewarm", "prewarm-adaptive", "oracle"}));
  c_sim->add_option("--window", sim.window)->check(CLI::PositiveNumber);
  c_sim->add_option("--quantile", sim.quantile)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--safety", sim.safety);
  c_sim->add_option("--clamp", sim.clamp, "MIN,MAX minutes (MAX may be inf)");
  c_sim->add_option("--max-pool", sim.max_pool)->check(CLI::NonNegativeNumber);
  c_sim->add_option("--latency-cold", sim.latency.cold_start_ms);
  c_sim->add_option("--latency-warm", sim.latency.warm_start_ms);
  c_sim->add_option("--latency-exec", sim.latency.exec_ms);
  c_sim->add_option("--gap-checkpoint", sim.gap_checkpoint);
  c_sim->add_option("--count-checkpoint", sim.count_checkpoint);
  c_sim->add_option("--granularity", sim.granularity)->check(CLI::IsMember({"minute", "hour"}));
  c_sim->add_option("--train-fraction", sim.train_fraction)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--limit", sim.limit, "Invocations replayed (0 = all)");
  c_sim->add_option("--samples", sim.settings.num_samples)->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.settings.seed);
  c_sim->add_option("--out", sim.out)->required();

  SynthArgs syn;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic traces");
  c_synth->add_option("--pattern", syn.pattern)
      ->check(CLI::IsMember({"periodic", "sporadic", "bursty", "diurnal"}));
  c_synth->add_option("--seed", syn.spec.seed);
  c_synth->add_option("--length", syn.spec.length, "Minutes")->check(CLI::PositiveNumber);
  c_synth->add_option("--period", syn.spec.period);
  c_synth->add_option("--offset", syn.spec.offset);
  c_synth->add_option("--gap-min", syn.spec.gap_min);
  c_synth->add_option("--gap-max", syn.spec.gap_max);
  c_synth->add_option("--burst-gap", syn.spec.burst_gap);
  c_synth->add_option("--burst-minutes", syn.spec.burst_minutes);
  c_synth->add_option("--burst-rate", syn.spec.burst_rate);
  c_synth->add_option("--base", syn.spec.base);
  c_synth->add_option("--amplitude", syn.spec.amplitude);
  c_synth->add_option("--function-id", syn.spec.function_id);
  c_synth->add_option("--count", syn.count, "Functions, seeded seed..seed+count-1")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--format", syn.format)->check(CLI::IsMember({"series", "days"}));
  c_synth->add_option("--out", syn.out, "File (series) or directory (days)")->required();

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run a full experiment from a config file");
  c_run->add_option("--config", run.config)->required();
  c_run->add_option("--out", run.out, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_ingest) run_ingest(ingest);
    if (*c_cluster) run_cluster(cluster);
    if (*c_train) run_train(tr);
    if (*c_forecast) run_forecast(fc);
    if (*c_eval) run_evaluate(ev);
    if (*c_sim) run_simulate(sim);
    if (*c_synth) run_synth(syn);
    if (*c_run) run_run(run);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::kNonFinite ? kNumerical : kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return 0;
}
