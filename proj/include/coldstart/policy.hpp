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

// Container-management decisions derived from forecasts: idle windows after
// each invocation and prewarmed pool sizes per forecast step.

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/forecaster.hpp"

namespace coldstart::policy {

enum class PolicyKind {
  kFixedWindow,
  kAdaptiveWindow,
  kPrewarm,
  kPrewarmPlusAdaptive,
  kPerfectForesight,
};

std::string_view policy_kind_name(PolicyKind k);
PolicyKind parse_policy_kind(std::string_view name);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct PolicySpec {
  PolicyKind kind = PolicyKind::kFixedWindow;
  /// Window of the fixed policy, and the fallback of the others.
  double fixed_minutes = 10.0;
  double quantile = 0.9;
  double safety_factor = 1.2;
  double min_window = 1.0;
  double max_window = 240.0;
  int max_pool = 8;
  /// Added to the true next gap by the perfect-foresight oracle.
  double oracle_epsilon = 0.01;
  /// Whether the oracle also prewarms with the true per-step counts.
  bool oracle_prewarm = false;

  bool uses_adaptive_window() const;
  bool uses_prewarm() const;
  /// Short label for reports.
  std::string label() const;
  /// Throws InvalidPolicy.
  void validate() const;
  bool operator==(const PolicySpec&) const = default;
};

nlohmann::json policy_to_json(const PolicySpec& p);
PolicySpec policy_from_json(const nlohmann::json& j);

/// Throws InvalidPolicy when minutes <= 0.
PolicySpec fixed_window(double minutes = 10.0);
PolicySpec adaptive_window_policy(double quantile = 0.9, double safety_factor = 1.2,
                                  double min_window = 1.0, double max_window = 240.0);
PolicySpec prewarm_policy(double quantile = 0.9, int max_pool = 8);
PolicySpec perfect_foresight_policy(double min_window = 1.0, double max_window = kUnbounded);

struct IdleWindowDecision {
  std::size_t at_event = 0;
  double window_minutes = 0.0;
};

/// clip(safetyFactor * quantile(q) of the first step of `gap_forecast`).
IdleWindowDecision adaptive_window(const forecaster::ForecastDistribution& gap_forecast,
                                   const PolicySpec& spec, std::size_t at_event = 0);
double clamp_window(double minutes, const PolicySpec& spec);

struct PrewarmPlan {
  std::int64_t interval_start = 0;   // step index
  std::int64_t interval_length = 1;  // steps
  int pool_size = 0;
  double step_minutes = 60.0;        // forecast granularity

  double start_minutes() const { return static_cast<double>(interval_start) * step_minutes; }
  double length_minutes() const { return static_cast<double>(interval_length) * step_minutes; }
  bool operator==(const PrewarmPlan&) const = default;
};

/// poolSize[t] = min(maxPool, ceil(quantile(q) of step t)) for steps
/// first_step, first_step + 1, ...
std::vector<PrewarmPlan> prewarm_schedule(const forecaster::ForecastDistribution& count_forecast,
                                          const PolicySpec& spec, std::int64_t first_step,
                                          double step_minutes);

/// Windows that keep each container exactly until the next invocation:
/// clamp(next gap + epsilon). The last event gets the minimum window.
std::vector<IdleWindowDecision> perfect_foresight(std::span<const double> event_minutes,
                                                  const PolicySpec& spec);

/// Pools equal to the true invocation count of each step (capped).
std::vector<PrewarmPlan> perfect_prewarm(std::span<const double> event_minutes,
                                         double step_minutes, int max_pool);

/// CSV {eventIndex,windowMinutes}.
void write_window_log_csv(std::ostream& out, const std::vector<IdleWindowDecision>& d);
/// CSV {step,poolSize}.
void write_prewarm_log_csv(std::ostream& out, const std::vector<PrewarmPlan>& plans);

} // namespace coldstart::policy
