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

#include "coldstart/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "coldstart/error.hpp"

namespace coldstart::synth {

namespace {

constexpr std::pair<Pattern, std::string_view> kNames[] = {
    {Pattern::kPeriodic, "periodic"},
    {Pattern::kSporadic, "sporadic"},
    {Pattern::kBursty, "bursty"},
    {Pattern::kDiurnal, "diurnal"},
};

std::vector<std::string> split_id(const std::string& id) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t colon = id.find(':', begin);
    parts.push_back(id.substr(begin, colon - begin));
    if (colon == std::string::npos) {
      break;
    }
    begin = colon + 1;
  }
  return parts;
}

} // namespace

std::string_view pattern_name(Pattern p) {
  for (const auto& [pattern, name] : kNames) {
    if (pattern == p) {
      return name;
    }
  }
  return "sporadic";
}

Pattern parse_pattern(std::string_view name) {
  for (const auto& [pattern, n] : kNames) {
    if (n == name) {
      return pattern;
    }
  }
  throw Error(Errc::kBadConfig, "unknown pattern '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  if (length == 0) {
    throw Error(Errc::kBadConfig, "length must be positive");
  }
  if (period < 1 || offset < 0) {
    throw Error(Errc::kBadConfig, "period must be >= 1 and offset >= 0");
  }
  if (gap_min < 1 || gap_max < gap_min) {
    throw Error(Errc::kBadConfig, "gaps must satisfy 1 <= gap_min <= gap_max");
  }
  if (!(burst_gap > 0.0) || burst_minutes < 1 || !(burst_rate >= 0.0)) {
    throw Error(Errc::kBadConfig, "burst parameters must be positive");
  }
  if (!(base >= amplitude) || !(amplitude >= 0.0)) {
    throw Error(Errc::kBadConfig, "diurnal counts need base >= amplitude >= 0");
  }
}

trace::InvocationSeries generate(const SynthSpec& spec) {
  spec.validate();
  trace::InvocationSeries s;
  s.function_id = spec.function_id.empty()
                      ? "synth:" + std::string(pattern_name(spec.pattern)) + ":" +
                            std::to_string(spec.seed)
                      : spec.function_id;
  s.granularity = trace::Granularity::kMinute;
  s.start_time = spec.start;
  s.values.assign(spec.length, 0);
  const auto n = static_cast<std::int64_t>(spec.length);
  std::mt19937_64 rng(spec.seed);

  switch (spec.pattern) {
    case Pattern::kPeriodic:
      for (std::int64_t t = spec.offset; t < n; t += spec.period) {
        s.values[static_cast<std::size_t>(t)] = 1;
      }
      break;
    case Pattern::kSporadic: {
      std::uniform_int_distribution<std::int64_t> gap(spec.gap_min, spec.gap_max);
      for (std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, spec.gap_max - 1)(rng);
           t < n; t += gap(rng)) {
        s.values[static_cast<std::size_t>(t)] = 1;
      }
      break;
    }
    case Pattern::kBursty: {
      std::exponential_distribution<double> wait(1.0 / spec.burst_gap);
      std::poisson_distribution<std::int64_t> count(spec.burst_rate);
      double t = wait(rng);
      while (t < static_cast<double>(n)) {
        const auto begin = static_cast<std::int64_t>(t);
        for (std::int64_t m = begin; m < std::min(n, begin + spec.burst_minutes); ++m) {
          s.values[static_cast<std::size_t>(m)] += count(rng);
        }
        t = static_cast<double>(begin + spec.burst_minutes) + wait(rng);
      }
      break;
    }
    case Pattern::kDiurnal:
      for (std::int64_t h = 0; h * 60 < n; ++h) {
        const auto total = static_cast<std::int64_t>(std::llround(
            spec.base +
            spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(h % 24) / 24.0)));
        for (std::int64_t m = 0; m < 60 && h * 60 + m < n; ++m) {
          s.values[static_cast<std::size_t>(h * 60 + m)] = total / 60 + (m < total % 60 ? 1 : 0);
        }
      }
      break;
  }
  return s;
}

std::vector<std::string> write_day_files(const std::vector<trace::InvocationSeries>& series,
                                         const std::string& directory, trace::Trigger trigger) {
  std::size_t days = 0;
  for (const auto& s : series) {
    if (s.granularity != trace::Granularity::kMinute) {
      throw Error(Errc::kWrongGranularity, s.function_id + " is not minute-level");
    }
    if (split_id(s.function_id).size() != 3) {
      throw Error(Errc::kBadConfig, "function id '" + s.function_id +
                                        "' is not owner:app:function");
    }
    days = std::max(days, s.values.size() / trace::kMinutesPerDay);
  }
  std::filesystem::create_directories(directory);
  std::vector<std::string> paths;
  for (std::size_t d = 0; d < days; ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "day_%02zu.csv", d + 1);
    const std::string path = (std::filesystem::path(directory) / name).string();
    std::ofstream out(path);
    if (!out) {
      throw Error(Errc::kIo, "cannot write " + path);
    }
    out << "HashOwner,HashApp,HashFunction,Trigger";
    for (std::size_t m = 1; m <= trace::kMinutesPerDay; ++m) {
      out << ',' << m;
    }
    out << '\n';
    for (const auto& s : series) {
      if (s.values.size() < (d + 1) * trace::kMinutesPerDay) {
        continue;
      }
      const auto parts = split_id(s.function_id);
      out << parts[0] << ',' << parts[1] << ',' << parts[2] << ',' << trace::trigger_name(trigger);
      for (std::size_t m = 0; m < trace::kMinutesPerDay; ++m) {
        out << ',' << s.values[d * trace::kMinutesPerDay + m];
      }
      out << '\n';
    }
    paths.push_back(path);
  }
  return paths;
}

} // namespace coldstart::synth
