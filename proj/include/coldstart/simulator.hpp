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

// Discrete-event replay of one function's invocations against a container
// lifecycle with scale-to-zero: containers are created on demand (cold
// start), serve one invocation at a time, idle for a policy-chosen window and
// are then evicted.
//
// Equal-time events are processed in the order prewarm, completion, arrival,
// eviction, so a container is still usable at the exact instant it expires.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/forecaster.hpp"
#include "coldstart/policy.hpp"

namespace coldstart::simulator {

inline constexpr double kMsPerMinute = 60000.0;
inline constexpr std::size_t kNormalizedInvocations = 100;

enum class ContainerStatus { kPrewarming, kWarmIdle, kBusy, kEvicted };

struct ContainerState {
  std::size_t id = 0;
  ContainerStatus state = ContainerStatus::kPrewarming;
  double created_ms = 0.0;
  double idle_since_ms = 0.0;
  double current_window = 0.0; // minutes
};

struct LatencyModel {
  double cold_start_ms = 500.0;
  double warm_start_ms = 5.0;
  double exec_ms = 100.0;

  /// Throws BadConfig.
  void validate() const;
};

nlohmann::json latency_to_json(const LatencyModel& m);
LatencyModel latency_from_json(const nlohmann::json& j);

/// Forecast-backed inputs of the adaptive and prewarm policies.
struct ForecasterHook {
  /// Next-gap forecast (minutes) after the arrival with this index has been
  /// observed. std::nullopt falls back to the fixed window.
  std::function<std::optional<forecaster::ForecastDistribution>(std::size_t event_index)>
      next_gap;
  /// Pool sizes per interval over the replayed period.
  std::function<std::vector<policy::PrewarmPlan>()> prewarm_plan;
};

struct WindowLogEntry {
  double time_minutes = 0.0;
  double window_minutes = 0.0;
  bool operator==(const WindowLogEntry&) const = default;
};

struct Eviction {
  std::size_t container = 0;
  double time_ms = 0.0;
  bool operator==(const Eviction&) const = default;
};

struct SimulationResult {
  std::string function_id;
  std::string policy;
  std::size_t invocations = 0;
  std::size_t cold_starts = 0;
  std::size_t warm_starts = 0;
  /// 100 * cold / invocations; absent for an empty trace.
  std::optional<double> cold_starts_per_100;
  std::vector<double> latencies; // ms, one per invocation
  std::vector<bool> cold;        // per invocation
  double container_minutes = 0.0;
  std::vector<WindowLogEntry> window_log; // one entry per arrival
  std::vector<Eviction> evictions;        // in time order
  std::size_t containers_created = 0;
  bool empty_trace = false;
  /// Fewer than kNormalizedInvocations invocations were replayed.
  bool short_trace = false;

  double mean_latency_ms() const;
  /// Type-7 99th percentile.
  double p99_latency_ms() const;
  bool operator==(const SimulationResult&) const = default;
};

/// Replays `event_minutes` (ascending). Throws UnsortedEvents, InvalidPolicy,
/// MissingForecaster.
SimulationResult simulate(std::span<const double> event_minutes, const policy::PolicySpec& policy,
                          const LatencyModel& latency, const ForecasterHook& hook = {},
                          const std::string& function_id = "");

/// The first `n` events, used when normalizing to cold starts per 100.
std::span<const double> first_invocations(std::span<const double> event_minutes,
                                          std::size_t n = kNormalizedInvocations);

struct PolicyRun {
  policy::PolicySpec policy;
  ForecasterHook hook;
};

/// One result per policy on the same events. Throws BadConfig for fewer
/// than two policies.
std::vector<SimulationResult> compare(std::span<const double> event_minutes,
                                      const std::vector<PolicyRun>& runs,
                                      const LatencyModel& latency,
                                      const std::string& function_id = "");

/// 100 * (baseline - candidate) / baseline. Throws ZeroBaseline.
double cold_start_reduction(const SimulationResult& baseline, const SimulationResult& candidate);
/// Rounded to the nearest integer, e.g. "79%".
std::string format_reduction(double percent);

nlohmann::json result_to_json(const SimulationResult& r);

struct SummaryRow {
  std::string function;
  std::string platform;
  double icw_min = 0.0;
  double icw_max = 0.0;
  std::optional<double> cs_per_100;
};

SummaryRow summarize(const SimulationResult& r, const std::string& platform);
/// CSV {function,platform,icw_min,icw_max,cs_per_100}.
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// CSV {function,policy,invocation,time_minutes,window_minutes,cold,cumulative_cold_starts}.
void write_plot_csv(std::ostream& out, const std::vector<SimulationResult>& results);

} // namespace coldstart::simulator
