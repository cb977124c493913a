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

// Azure-Functions-2019-style invocation logs: one CSV per UTC day with the
// columns HashOwner,HashApp,HashFunction,Trigger,1..1440.

#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coldstart::trace {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::size_t kMinutesPerDay = 1440;

enum class Trigger { kHttp, kTimer, kEvent, kQueue, kStorage, kOrchestration, kOthers };

std::string_view trigger_name(Trigger t);
/// Unknown names map to kOthers.
Trigger parse_trigger(std::string_view name);

enum class Granularity { kMinute, kHour };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);
/// Seconds per step.
std::int64_t step_seconds(Granularity g);

std::string format_rfc3339(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SSZ" (and a "+00:00" offset).
Timestamp parse_rfc3339(std::string_view text);

struct RawTraceRow {
  std::string owner_hash;
  std::string app_hash;
  std::string function_hash;
  Trigger trigger = Trigger::kOthers;
  std::vector<std::int64_t> minute_counts; // kMinutesPerDay entries

  std::string function_id() const;
};

struct InvocationSeries {
  std::string function_id;
  Granularity granularity = Granularity::kMinute;
  Timestamp start_time{};
  std::vector<std::int64_t> values;

  std::int64_t total() const;
  bool operator==(const InvocationSeries&) const = default;
};

/// Inter-arrival gaps (in minutes) between the nonzero minutes of a series.
struct GapSeries {
  std::string function_id;
  std::vector<std::int64_t> gaps;
  Timestamp first_event_time{};
  std::int64_t first_event_index = 0; // minute offset from the series start

  /// Minute offsets of all events, reconstructed from the gaps.
  std::vector<std::int64_t> event_indices() const;
};

/// Throws Error{MalformedHeader} or Error{BadCount} (with row and column).
std::vector<RawTraceRow> parse_day_file(std::istream& in);

std::vector<RawTraceRow> filter_http(std::span<const RawTraceRow> rows);

/// Concatenates each function's daily counts in day order; days on which a
/// function is absent contribute zeros.
std::map<std::string, InvocationSeries> merge_days(
    const std::vector<std::vector<RawTraceRow>>& day_tables, Timestamp start);

InvocationSeries resample_to_hour(const InvocationSeries& s);

/// One event per nonzero minute; within-minute multiplicity collapses.
GapSeries to_gap_series(const InvocationSeries& s);

struct SeriesWindow {
  std::size_t start = 0; // index of the first context value
  std::span<const std::int64_t> context;
  std::span<const std::int64_t> target;
};

/// Sliding (context, target) windows anchored so the last one ends at the
/// series end; returned in increasing start order. The spans view s.values.
std::vector<SeriesWindow> split_series(const InvocationSeries& s,
                                       std::size_t context_length,
                                       std::size_t prediction_length,
                                       std::size_t stride);

} // namespace coldstart::trace
