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

#include "coldstart/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "coldstart/error.hpp"
#include "coldstart/series_io.hpp"

namespace coldstart::pipeline {

namespace fs = std::filesystem;
using forecaster::ForecastInput;
using forecaster::ModelConfig;
using trace::Granularity;
using trace::InvocationSeries;

namespace {

template <typename T>
std::vector<T> keep_last(std::vector<T> v, std::size_t n) {
  if (n > 0 && v.size() > n) {
    v.erase(v.begin(), v.end() - static_cast<std::ptrdiff_t>(n));
  }
  return v;
}

std::vector<double> as_doubles(std::span<const std::int64_t> v) {
  return {v.begin(), v.end()};
}

std::size_t season_of(Granularity g) {
  return g == Granularity::kHour ? 24 : trace::kMinutesPerDay;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

} // namespace

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw Error(Errc::kIo, "cannot write " + path);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, "cannot read " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_stem(const std::string& function_id) {
  std::string out = function_id;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') {
      c = '_';
    }
  }
  return out;
}

IngestResult ingest_day_files(const std::vector<std::string>& paths, bool http_only,
                              trace::Timestamp start) {
  IngestResult r;
  r.start = start;
  r.num_days = paths.size();
  std::vector<std::vector<trace::RawTraceRow>> days;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) {
      throw Error(Errc::kIo, "cannot open " + path);
    }
    std::vector<trace::RawTraceRow> rows;
    try {
      rows = trace::parse_day_file(in);
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
    r.rows_read += rows.size();
    if (http_only) {
      rows = trace::filter_http(rows);
    }
    r.rows_kept += rows.size();
    days.push_back(std::move(rows));
  }
  auto merged = trace::merge_days(days, start);
  for (auto& [id, s] : merged) {
    r.series.push_back(std::move(s));
  }
  return r;
}

nlohmann::json manifest_json(const IngestResult& r, Granularity g, bool http_only) {
  const std::size_t minutes = r.num_days * trace::kMinutesPerDay;
  const std::size_t length = g == Granularity::kHour ? minutes / 60 : minutes;
  std::int64_t total = 0;
  for (const auto& s : r.series) {
    total += s.total();
  }
  return {{"numDays", r.num_days},
          {"seriesLength", length},
          {"granularity", trace::granularity_name(g)},
          {"numFunctions", r.series.size()},
          {"rowsRead", r.rows_read},
          {"rowsKept", r.rows_kept},
          {"httpOnly", http_only},
          {"totalInvocations", total},
          {"startTime", trace::format_rfc3339(r.start)},
          {"endTime", trace::format_rfc3339(r.start + std::chrono::minutes(minutes))}};
}

InvocationSeries at_granularity(const InvocationSeries& s, Granularity g) {
  if (s.granularity == g) {
    return s;
  }
  return trace::resample_to_hour(s);
}

ClusterOutput cluster_series(const std::vector<InvocationSeries>& series, double eps,
                             std::size_t min_pts) {
  if (series.empty()) {
    throw Error(Errc::kEmpty, "no series to cluster");
  }
  std::vector<clustering::PatternFeatures> raw;
  raw.reserve(series.size());
  for (const auto& s : series) {
    raw.push_back(clustering::compute_features(s));
  }
  ClusterOutput out;
  out.normalized = clustering::minmax_normalize(raw);
  std::vector<std::vector<double>> points;
  for (const auto& f : out.normalized) {
    points.push_back(f.vector);
  }
  out.assignment = clustering::dbscan(points, eps, min_pts);
  out.representatives = clustering::select_representatives(out.assignment, out.normalized);
  out.json = clustering::clusters_to_json(out.assignment, out.normalized, out.representatives);
  return out;
}

std::vector<ForecastInput> count_windows(const InvocationSeries& s, std::size_t end,
                                         const ModelConfig& cfg, std::size_t stride,
                                         std::size_t max_windows) {
  std::vector<ForecastInput> out;
  for (std::size_t t0 : keep_last(forecaster::training_origins(end, cfg, stride), max_windows)) {
    out.push_back(forecaster::build_input(s, t0, cfg));
  }
  return out;
}

std::vector<ForecastInput> gap_windows(std::span<const double> gaps, std::size_t end,
                                       const ModelConfig& cfg, std::size_t stride,
                                       std::size_t max_windows) {
  std::vector<ForecastInput> out;
  for (std::size_t t0 : keep_last(forecaster::training_origins(end, cfg, stride), max_windows)) {
    out.push_back(forecaster::build_gap_input(gaps.first(end), t0, cfg));
  }
  return out;
}

GapReplay make_gap_replay(const InvocationSeries& minute_series, double train_fraction,
                          std::size_t limit) {
  const trace::GapSeries g = trace::to_gap_series(minute_series);
  GapReplay r;
  for (std::int64_t e : g.event_indices()) {
    r.event_minutes.push_back(static_cast<double>(e));
  }
  r.gaps.assign(g.gaps.begin(), g.gaps.end());
  r.split = static_cast<std::size_t>(
      std::floor(std::clamp(train_fraction, 0.0, 1.0) * static_cast<double>(r.gaps.size())));
  const std::size_t end = std::min(r.event_minutes.size(), r.split + (limit == 0 ? r.event_minutes.size() : limit));
  r.replay.assign(r.event_minutes.begin() + static_cast<std::ptrdiff_t>(r.split),
                  r.event_minutes.begin() + static_cast<std::ptrdiff_t>(end));
  return r;
}

simulator::ForecasterHook gap_hook(const forecaster::Forecaster& gap_model,
                                   const GapReplay& replay, const ForecastSettings& settings) {
  simulator::ForecasterHook hook;
  hook.next_gap = [&gap_model, &replay,
                   settings](std::size_t i) -> std::optional<forecaster::ForecastDistribution> {
    const std::size_t t0 = replay.split + i;
    if (t0 < gap_model.config().required_history() || t0 > replay.gaps.size()) {
      return std::nullopt;
    }
    const std::span<const double> seen(replay.gaps.data(), t0);
    const ForecastInput input = forecaster::build_gap_input(seen, t0, gap_model.config());
    return gap_model.forecast(input, settings.num_samples, settings.seed + t0, 1);
  };
  return hook;
}

std::vector<policy::PrewarmPlan> rolling_prewarm_plan(const forecaster::Forecaster& count_model,
                                                      const InvocationSeries& counts,
                                                      const GapReplay& replay,
                                                      const policy::PolicySpec& spec,
                                                      const ForecastSettings& settings) {
  std::vector<policy::PrewarmPlan> plans;
  if (replay.replay.empty()) {
    return plans;
  }
  const ModelConfig& cfg = count_model.config();
  const double step = static_cast<double>(trace::step_seconds(counts.granularity)) / 60.0;
  const auto first = static_cast<std::size_t>(std::floor(replay.replay.front() / step));
  const auto last = static_cast<std::size_t>(std::floor(replay.replay.back() / step));
  for (std::size_t b = first; b <= last; b += cfg.prediction_length) {
    if (b < cfg.required_history() || b > counts.values.size()) {
      continue;
    }
    const std::size_t steps = std::min(cfg.prediction_length, last + 1 - b);
    InvocationSeries seen = counts;
    seen.values.resize(b);
    const ForecastInput input = forecaster::build_input(seen, b, cfg);
    const auto dist = count_model.forecast(input, settings.num_samples, settings.seed + b, steps);
    const auto block =
        policy::prewarm_schedule(dist, spec, static_cast<std::int64_t>(b), step);
    plans.insert(plans.end(), block.begin(), block.end());
  }
  return plans;
}

std::string platform_name(const policy::PolicySpec& spec) {
  switch (spec.kind) {
    case policy::PolicyKind::kFixedWindow: return "OpenWhisk";
    case policy::PolicyKind::kPerfectForesight: return "Oracle";
    default: return "OW + Transf";
  }
}

ExperimentConfig::ExperimentConfig() {
  model.context_length = 48;
  model.prediction_length = 24;
  model.num_layers_encoder = 2;
  model.num_layers_decoder = 2;
  model.feedforward_dim = 64;
  model.d_model = 16;
  model.num_heads = 2;
  model.dropout = 0.0;
  model.hidden_size = 16;
  training.epochs = 10;
  training.batch_size = 8;

  gap_model.context_length = 32;
  gap_model.prediction_length = 4;
  gap_model.lags_sequence = forecaster::default_gap_lags();
  gap_model.num_layers_encoder = 1;
  gap_model.num_layers_decoder = 1;
  gap_model.d_model = 16;
  gap_model.num_heads = 2;
  gap_model.feedforward_dim = 32;
  gap_model.dropout = 0.0;
  gap_training.epochs = 10;
  gap_training.batch_size = 8;

  policies = {policy::fixed_window(10.0), policy::adaptive_window_policy(),
              policy::perfect_foresight_policy()};
}

void ExperimentConfig::validate() const {
  if (trace_paths.empty() && series_path.empty()) {
    throw Error(Errc::kBadConfig, "either tracePaths or seriesPath is required");
  }
  if (!(eps > 0.0) || min_pts == 0) {
    throw Error(Errc::kBadConfig, "clustering needs eps > 0 and minPts >= 1");
  }
  for (const std::string& m : models) {
    if (m != "transformer" && m != "gru") {
      throw Error(Errc::kBadConfig, "unknown model '" + m + "'");
    }
  }
  if (window_stride == 0) {
    throw Error(Errc::kBadConfig, "windowStride must be positive");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::kBadConfig, "trainFraction must lie in (0, 1)");
  }
  if (forecast.num_samples == 0) {
    throw Error(Errc::kBadConfig, "numSamples must be positive");
  }
  if (output_dir.empty()) {
    throw Error(Errc::kBadConfig, "outputDir is required");
  }
  model.validate();
  gap_model.validate();
  latency.validate();
  for (const auto& p : policies) {
    p.validate();
  }
}

nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& p : c.policies) {
    policies.push_back(policy::policy_to_json(p));
  }
  return {{"tracePaths", c.trace_paths},
          {"seriesPath", c.series_path},
          {"httpOnly", c.http_only},
          {"startTime", trace::format_rfc3339(c.start)},
          {"granularity", trace::granularity_name(c.granularity)},
          {"clustering", {{"enabled", c.clustering_enabled}, {"eps", c.eps}, {"minPts", c.min_pts}}},
          {"functions", c.functions},
          {"models", c.models},
          {"model", forecaster::config_to_json(c.model)},
          {"training", forecaster::train_config_to_json(c.training)},
          {"windowStride", c.window_stride},
          {"maxWindows", c.max_windows},
          {"gapModel", forecaster::config_to_json(c.gap_model)},
          {"gapTraining", forecaster::train_config_to_json(c.gap_training)},
          {"trainFraction", c.train_fraction},
          {"forecast", {{"numSamples", c.forecast.num_samples}, {"seed", c.forecast.seed}}},
          {"policies", std::move(policies)},
          {"latency", simulator::latency_to_json(c.latency)},
          {"replayLimit", c.replay_limit},
          {"outputDir", c.output_dir}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.trace_paths = j.value("tracePaths", c.trace_paths);
    c.series_path = j.value("seriesPath", c.series_path);
    c.http_only = j.value("httpOnly", c.http_only);
    if (j.contains("startTime")) {
      c.start = trace::parse_rfc3339(j.at("startTime").get<std::string>());
    }
    if (j.contains("granularity")) {
      c.granularity = trace::parse_granularity(j.at("granularity").get<std::string>());
    }
    if (j.contains("clustering")) {
      const auto& k = j.at("clustering");
      c.clustering_enabled = k.value("enabled", c.clustering_enabled);
      c.eps = k.value("eps", c.eps);
      c.min_pts = k.value("minPts", c.min_pts);
    }
    c.functions = j.value("functions", c.functions);
    c.models = j.value("models", c.models);
    if (j.contains("model")) {
      c.model = forecaster::config_from_json(j.at("model"));
    }
    if (j.contains("training")) {
      c.training = forecaster::train_config_from_json(j.at("training"));
    }
    c.window_stride = j.value("windowStride", c.window_stride);
    c.max_windows = j.value("maxWindows", c.max_windows);
    if (j.contains("gapModel")) {
      c.gap_model = forecaster::config_from_json(j.at("gapModel"));
    }
    if (j.contains("gapTraining")) {
      c.gap_training = forecaster::train_config_from_json(j.at("gapTraining"));
    }
    c.train_fraction = j.value("trainFraction", c.train_fraction);
    if (j.contains("forecast")) {
      c.forecast.num_samples = j.at("forecast").value("numSamples", c.forecast.num_samples);
      c.forecast.seed = j.at("forecast").value("seed", c.forecast.seed);
    }
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j.at("policies")) {
        c.policies.push_back(policy::policy_from_json(p));
      }
    }
    if (j.contains("latency")) {
      c.latency = simulator::latency_from_json(j.at("latency"));
    }
    c.replay_limit = j.value("replayLimit", c.replay_limit);
    c.output_dir = j.value("outputDir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadConfig, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, path + ": " + e.what());
  }
  return experiment_from_json(j);
}

nlohmann::json run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path out(config.output_dir);
  fs::create_directories(out / "models");
  write_text(join(out, "config.json"), experiment_to_json(config).dump(2) + "\n");
  nlohmann::json summary = {{"warnings", nlohmann::json::array()}};
  auto warn = [&](const std::string& w) { summary["warnings"].push_back(w); };

  // Ingest.
  std::vector<InvocationSeries> series;
  if (!config.series_path.empty()) {
    std::istringstream in(read_text(config.series_path));
    series = trace::read_series_csv(in);
  } else {
    IngestResult ingested = ingest_day_files(config.trace_paths, config.http_only, config.start);
    write_text(join(out, "manifest.json"),
               manifest_json(ingested, config.granularity, config.http_only).dump(2) + "\n");
    series = std::move(ingested.series);
  }
  std::map<std::string, const InvocationSeries*> by_id;
  for (const auto& s : series) {
    by_id[s.function_id] = &s;
  }

  // Select functions.
  std::vector<std::string> selected = config.functions;
  if (selected.empty() && config.clustering_enabled) {
    const ClusterOutput clusters = cluster_series(series, config.eps, config.min_pts);
    write_text(join(out, "clusters.json"), clusters.json.dump(2) + "\n");
    for (const auto& [label, id] : clusters.representatives) {
      selected.push_back(id);
    }
  }
  if (selected.empty()) {
    for (const auto& s : series) {
      selected.push_back(s.function_id);
    }
  }
  summary["functions"] = selected;

  std::vector<metrics::MetricReport> reports;
  std::vector<simulator::SimulationResult> runs;
  std::vector<simulator::SummaryRow> table;
  const bool need_gaps = std::any_of(config.policies.begin(), config.policies.end(),
                                     [](const auto& p) { return p.uses_adaptive_window(); });
  const bool need_counts = std::any_of(config.policies.begin(), config.policies.end(),
                                       [](const auto& p) { return p.uses_prewarm(); });

  for (const std::string& id : selected) {
    const auto found = by_id.find(id);
    if (found == by_id.end()) {
      throw Error(Errc::kBadConfig, "function '" + id + "' not found in the input");
    }
    const InvocationSeries& minute = *found->second;
    const std::string stem = file_stem(id);
    const InvocationSeries counts = at_granularity(minute, config.granularity);
    const ModelConfig& mc = config.model;

    // Count models: train on the prefix, forecast and score the final horizon.
    std::map<std::string, std::unique_ptr<forecaster::Forecaster>> count_models;
    const std::size_t len = counts.values.size();
    if (len >= mc.required_history() + 2 * mc.prediction_length) {
      const std::size_t t0 = len - mc.prediction_length;
      const auto windows = count_windows(counts, t0, mc, config.window_stride, config.max_windows);
      const ForecastInput test = forecaster::build_input(counts, t0, mc);
      const std::vector<double> actual = test.raw_targets();
      for (const std::string& kind : config.models) {
        auto model = forecaster::make_forecaster(kind, mc, config.training.seed);
        std::ostringstream loss;
        loss << "epoch,loss\n";
        forecaster::train(*model, windows, config.training, [&](std::size_t e, double l) {
          char buf[48];
          std::snprintf(buf, sizeof buf, "%.17g", l);
          loss << e << ',' << buf << '\n';
        });
        forecaster::save_checkpoint(*model, join(out / "models", stem + "." + kind + ".json"));
        write_text(join(out / "losses", stem + "." + kind + ".csv"), loss.str());
        const auto dist =
            model->forecast(test, config.forecast.num_samples, config.forecast.seed);
        write_text(join(out / "forecasts", stem + "." + kind + ".json"),
                   forecaster::forecast_to_json(dist, id, t0,
                                                std::string(trace::granularity_name(counts.granularity)),
                                                config.forecast.seed)
                           .dump(2) +
                       "\n");
        reports.push_back(metrics::evaluate(actual, dist.point_forecast, kind, id));
        count_models[kind] = std::move(model);
      }
      const std::size_t season = season_of(counts.granularity);
      if (t0 >= season) {
        const auto history = as_doubles(std::span(counts.values).first(t0));
        reports.push_back(metrics::evaluate(
            actual, forecaster::seasonal_naive(history, season, mc.prediction_length),
            "seasonal-naive", id));
      }
    } else {
      warn(id + ": series too short for the count model");
    }

    // Policies.
    GapReplay replay;
    try {
      replay = make_gap_replay(minute, config.train_fraction, config.replay_limit);
    } catch (const Error& e) {
      warn(id + ": " + e.what());
      continue;
    }
    std::unique_ptr<forecaster::Forecaster> gap_model;
    if (need_gaps) {
      if (replay.split >= config.gap_model.required_history() + config.gap_model.prediction_length) {
        gap_model = forecaster::make_forecaster("transformer", config.gap_model,
                                                config.gap_training.seed);
        const auto windows = gap_windows(replay.gaps, replay.split, config.gap_model, 1,
                                         config.max_windows);
        forecaster::train(*gap_model, windows, config.gap_training);
        forecaster::save_checkpoint(*gap_model, join(out / "models", stem + ".gaps.json"));
      } else {
        warn(id + ": too few gaps to train the gap model; adaptive windows fall back");
      }
    }
    for (std::size_t p = 0; p < config.policies.size(); ++p) {
      const policy::PolicySpec& spec = config.policies[p];
      simulator::ForecasterHook hook;
      if (spec.uses_adaptive_window()) {
        if (gap_model) {
          hook = gap_hook(*gap_model, replay, config.forecast);
        } else {
          hook.next_gap = [](std::size_t) { return std::optional<forecaster::ForecastDistribution>(); };
        }
      }
      if (spec.uses_prewarm()) {
        const auto it = count_models.begin();
        std::vector<policy::PrewarmPlan> plan;
        if (need_counts && it != count_models.end()) {
          plan = rolling_prewarm_plan(*it->second, counts, replay, spec, config.forecast);
          if (plan.empty()) {
            warn(id + ": replay starts before the count model has enough history; prewarm plan is empty");
          }
        } else {
          warn(id + ": no count model; prewarm plan is empty");
        }
        hook.prewarm_plan = [plan] { return plan; };
      }
      simulator::SimulationResult r =
          simulator::simulate(replay.replay, spec, config.latency, hook, id);
      write_text(join(out / "simulation", stem + "." + std::to_string(p) + ".json"),
                 simulator::result_to_json(r).dump(2) + "\n");
      table.push_back(simulator::summarize(r, platform_name(spec)));
      runs.push_back(std::move(r));
    }
  }

  std::ostringstream csv;
  metrics::write_reports_csv(csv, reports);
  write_text(join(out, "metrics.csv"), csv.str());
  write_text(join(out, "metrics.json"), metrics::reports_to_json(reports).dump(2) + "\n");
  std::ostringstream table_csv;
  simulator::write_summary_csv(table_csv, table);
  write_text(join(out, "table.csv"), table_csv.str());
  std::ostringstream plot;
  simulator::write_plot_csv(plot, runs);
  write_text(join(out, "plot.csv"), plot.str());

  nlohmann::json reductions = nlohmann::json::array();
  const std::size_t per = config.policies.size();
  for (std::size_t f = 0; per > 0 && f * per < runs.size(); ++f) {
    const auto& base = runs[f * per];
    for (std::size_t p = 1; p < per; ++p) {
      const auto& cand = runs[f * per + p];
      nlohmann::json row = {{"function", cand.function_id},
                            {"baseline", base.policy},
                            {"candidate", cand.policy},
                            {"baselineColdStarts", base.cold_starts},
                            {"candidateColdStarts", cand.cold_starts}};
      if (base.cold_starts > 0) {
        row["reductionPercent"] = simulator::cold_start_reduction(base, cand);
      }
      reductions.push_back(std::move(row));
    }
  }
  summary["reductions"] = std::move(reductions);
  write_text(join(out, "summary.json"), summary.dump(2) + "\n");
  return summary;
}

} // namespace coldstart::pipeline
