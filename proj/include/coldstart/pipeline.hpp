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

#pragma once

// End-to-end experiment driver: ingest -> cluster -> train/forecast/evaluate
// -> simulate, with every artifact written under one output directory and
// every random draw derived from seeds in the config.

#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/clustering.hpp"
#include "coldstart/forecaster.hpp"
#include "coldstart/metrics.hpp"
#include "coldstart/policy.hpp"
#include "coldstart/simulator.hpp"
#include "coldstart/trace.hpp"

namespace coldstart::pipeline {

struct IngestResult {
  std::vector<trace::InvocationSeries> series; // minute level, sorted by id
  std::size_t num_days = 0;
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  trace::Timestamp start{};
};

/// Reads day files in the given order. Errors are rethrown with the path.
IngestResult ingest_day_files(const std::vector<std::string>& paths, bool http_only,
                              trace::Timestamp start);

nlohmann::json manifest_json(const IngestResult& r, trace::Granularity g, bool http_only);

/// Minute series unchanged, or resampled to hours.
trace::InvocationSeries at_granularity(const trace::InvocationSeries& s, trace::Granularity g);

struct ClusterOutput {
  clustering::ClusterAssignment assignment;
  std::vector<clustering::PatternFeatures> normalized;
  std::map<int, std::string> representatives;
  nlohmann::json json;
};

/// Throws Empty for an empty series set.
ClusterOutput cluster_series(const std::vector<trace::InvocationSeries>& series, double eps,
                             std::size_t min_pts);

/// Training windows over values[0, end): the most recent `max_windows`
/// (0 = all) origins every `stride` steps.
std::vector<forecaster::ForecastInput> count_windows(const trace::InvocationSeries& s,
                                                     std::size_t end,
                                                     const forecaster::ModelConfig& cfg,
                                                     std::size_t stride,
                                                     std::size_t max_windows);
std::vector<forecaster::ForecastInput> gap_windows(std::span<const double> gaps, std::size_t end,
                                                   const forecaster::ModelConfig& cfg,
                                                   std::size_t stride, std::size_t max_windows);

/// Event times of a minute series split into a training prefix of gaps and
/// a replayed suffix of events.
struct GapReplay {
  std::vector<double> event_minutes; // all active minutes
  std::vector<double> gaps;          // gaps[k] = event k+1 - event k
  std::size_t split = 0;             // gaps[0, split) train the gap model
  std::vector<double> replay;        // events[split, split + limit)
};

/// Throws TooFewEvents.
GapReplay make_gap_replay(const trace::InvocationSeries& minute_series, double train_fraction,
                          std::size_t limit);

struct ForecastSettings {
  std::size_t num_samples = 100;
  std::uint64_t seed = 0;
};

/// Next-gap forecasts for replayed event i from the gaps observed so far;
/// std::nullopt while the history is shorter than the model needs.
simulator::ForecasterHook gap_hook(const forecaster::Forecaster& gap_model,
                                   const GapReplay& replay, const ForecastSettings& settings);

/// Rolling count forecasts over the replay period in blocks of the model's
/// horizon, turned into per-step pool sizes.
std::vector<policy::PrewarmPlan> rolling_prewarm_plan(const forecaster::Forecaster& count_model,
                                                      const trace::InvocationSeries& counts,
                                                      const GapReplay& replay,
                                                      const policy::PolicySpec& spec,
                                                      const ForecastSettings& settings);

/// "OpenWhisk" for the fixed window, "OW + Transf" for forecast-driven
/// policies, "Oracle" for perfect foresight.
std::string platform_name(const policy::PolicySpec& spec);

struct ExperimentConfig {
  std::vector<std::string> trace_paths;
  /// Canonical series CSV used instead of trace_paths when set.
  std::string series_path;
  bool http_only = true;
  trace::Timestamp start = trace::parse_rfc3339("2019-07-01T00:00:00Z");
  trace::Granularity granularity = trace::Granularity::kHour;

  bool clustering_enabled = true;
  double eps = 0.5;
  std::size_t min_pts = 3;
  /// Explicit function selection; overrides cluster representatives.
  std::vector<std::string> functions;

  std::vector<std::string> models = {"transformer", "gru"};
  forecaster::ModelConfig model;
  forecaster::TrainConfig training;
  std::size_t window_stride = 1;
  std::size_t max_windows = 0;

  forecaster::ModelConfig gap_model;
  forecaster::TrainConfig gap_training;
  double train_fraction = 0.5;

  ForecastSettings forecast;
  std::vector<policy::PolicySpec> policies;
  simulator::LatencyModel latency;
  std::size_t replay_limit = simulator::kNormalizedInvocations;

  std::string output_dir = "out";

  ExperimentConfig();
  /// Throws BadConfig / InvalidPolicy.
  void validate() const;
};

nlohmann::json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::string& path);

/// Runs every stage and returns the summary also written to summary.json.
nlohmann::json run_experiment(const ExperimentConfig& config);

/// Function id made safe for file names.
std::string file_stem(const std::string& function_id);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace coldstart::pipeline
