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

// Synthetic minute-level invocation traces with known generative processes:
//
//   periodic  one invocation every `period` minutes starting at `offset`
//   sporadic  integer gaps drawn uniformly from [gap_min, gap_max]
//   bursty    bursts start after exponential waits (mean `burst_gap` minutes);
//             each lasts `burst_minutes` minutes with Poisson(`burst_rate`)
//             invocations per minute
//   diurnal   hourly totals round(base + amplitude * sin(2 pi h / 24)),
//             spread evenly over the minutes of each hour

#include <cstdint>
#include <string>
#include <vector>

#include "coldstart/trace.hpp"

namespace coldstart::synth {

enum class Pattern { kPeriodic, kSporadic, kBursty, kDiurnal };

std::string_view pattern_name(Pattern p);
/// Throws BadConfig.
Pattern parse_pattern(std::string_view name);

struct SynthSpec {
  Pattern pattern = Pattern::kSporadic;
  std::uint64_t seed = 0;
  std::size_t length = 14 * trace::kMinutesPerDay; // minutes
  std::string function_id;                          // default: synth:<pattern>:<seed>
  trace::Timestamp start = trace::parse_rfc3339("2019-07-01T00:00:00Z");

  std::int64_t period = 30;
  std::int64_t offset = 0;
  std::int64_t gap_min = 11;
  std::int64_t gap_max = 20;
  double burst_gap = 180.0;
  std::int64_t burst_minutes = 5;
  double burst_rate = 3.0;
  double base = 50.0;
  double amplitude = 40.0;

  /// Throws BadConfig.
  void validate() const;
};

trace::InvocationSeries generate(const SynthSpec& spec);

/// Writes one trace-day CSV per whole day of the (minute-level) series into
/// `directory` as day_01.csv, day_02.csv, ...; function ids must have the
/// form owner:app:function. Returns the file paths.
std::vector<std::string> write_day_files(const std::vector<trace::InvocationSeries>& series,
                                         const std::string& directory,
                                         trace::Trigger trigger = trace::Trigger::kHttp);

} // namespace coldstart::synth
