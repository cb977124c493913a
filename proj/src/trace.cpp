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

#include "coldstart/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <set>

#include "coldstart/error.hpp"

namespace coldstart::trace {

namespace {

constexpr std::size_t kFixedColumns = 4;

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      break;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  return line;
}

void check_header(std::string_view line) {
  const auto cols = split_csv_line(line);
  static const char* kNames[] = {"HashOwner", "HashApp", "HashFunction", "Trigger"};
  if (cols.size() != kFixedColumns + kMinutesPerDay) {
    throw Error(Errc::kMalformedHeader,
                "expected " + std::to_string(kFixedColumns + kMinutesPerDay) +
                    " columns, found " + std::to_string(cols.size()));
  }
  for (std::size_t i = 0; i < kFixedColumns; ++i) {
    if (cols[i] != kNames[i]) {
      throw Error(Errc::kMalformedHeader, "column " + std::to_string(i + 1) +
                                              " is '" + std::string(cols[i]) +
                                              "', expected " + kNames[i]);
    }
  }
  for (std::size_t m = 0; m < kMinutesPerDay; ++m) {
    if (cols[kFixedColumns + m] != std::to_string(m + 1)) {
      throw Error(Errc::kMalformedHeader, "column " +
                                              std::to_string(kFixedColumns + m + 1) +
                                              " is '" +
                                              std::string(cols[kFixedColumns + m]) +
                                              "', expected " + std::to_string(m + 1));
    }
  }
}

} // namespace

std::string_view trigger_name(Trigger t) {
  switch (t) {
    case Trigger::kHttp: return "http";
    case Trigger::kTimer: return "timer";
    case Trigger::kEvent: return "event";
    case Trigger::kQueue: return "queue";
    case Trigger::kStorage: return "storage";
    case Trigger::kOrchestration: return "orchestration";
    case Trigger::kOthers: return "others";
  }
  return "others";
}

Trigger parse_trigger(std::string_view name) {
  for (Trigger t : {Trigger::kHttp, Trigger::kTimer, Trigger::kEvent, Trigger::kQueue,
                    Trigger::kStorage, Trigger::kOrchestration}) {
    if (name == trigger_name(t)) {
      return t;
    }
  }
  return Trigger::kOthers;
}

std::string_view granularity_name(Granularity g) {
  return g == Granularity::kMinute ? "minute" : "hour";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "minute") {
    return Granularity::kMinute;
  }
  if (name == "hour") {
    return Granularity::kHour;
  }
  throw Error(Errc::kParse, "unknown granularity '" + std::string(name) + "'");
}

std::int64_t step_seconds(Granularity g) {
  return g == Granularity::kMinute ? 60 : 3600;
}

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd(day);
  const hh_mm_ss hms(t - day);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail[8] = {0};
  const std::string str(text);
  const int n = std::sscanf(str.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%7s", &y, &mo, &d,
                            &h, &mi, &s, tail);
  const std::string_view zone(tail);
  if (n != 7 || (zone != "Z" && zone != "+00:00") || h > 23 || mi > 59 || s > 60) {
    throw Error(Errc::kParse, "not an RFC 3339 UTC timestamp: '" + str + "'");
  }
  const year_month_day ymd{year(y), month(mo), day(d)};
  if (!ymd.ok()) {
    throw Error(Errc::kParse, "invalid calendar date: '" + str + "'");
  }
  return sys_days(ymd) + hours(h) + minutes(mi) + seconds(s);
}

std::string RawTraceRow::function_id() const {
  return owner_hash + ":" + app_hash + ":" + function_hash;
}

std::int64_t InvocationSeries::total() const {
  return std::accumulate(values.begin(), values.end(), std::int64_t{0});
}

std::vector<std::int64_t> GapSeries::event_indices() const {
  std::vector<std::int64_t> out;
  out.reserve(gaps.size() + 1);
  std::int64_t t = first_event_index;
  out.push_back(t);
  for (std::int64_t g : gaps) {
    t += g;
    out.push_back(t);
  }
  return out;
}

std::vector<RawTraceRow> parse_day_file(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::kMalformedHeader, "empty input");
  }
  check_header(strip_cr(line));

  std::vector<RawTraceRow> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    const std::string_view view = strip_cr(line);
    if (view.empty()) {
      continue;
    }
    const auto cols = split_csv_line(view);
    if (cols.size() != kFixedColumns + kMinutesPerDay) {
      throw Error(Errc::kBadCount, "row " + std::to_string(row_number) + " has " +
                                       std::to_string(cols.size()) + " fields");
    }
    RawTraceRow row;
    row.owner_hash = cols[0];
    row.app_hash = cols[1];
    row.function_hash = cols[2];
    row.trigger = parse_trigger(cols[3]);
    row.minute_counts.resize(kMinutesPerDay);
    for (std::size_t m = 0; m < kMinutesPerDay; ++m) {
      const std::string_view cell = cols[kFixedColumns + m];
      std::int64_t value = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() ||
          value < 0) {
        throw Error(Errc::kBadCount, "row " + std::to_string(row_number) +
                                         ", column " + std::to_string(m + 1) +
                                         ": '" + std::string(cell) + "'");
      }
      row.minute_counts[m] = value;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawTraceRow> filter_http(std::span<const RawTraceRow> rows) {
  std::vector<RawTraceRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const RawTraceRow& r) { return r.trigger == Trigger::kHttp; });
  return out;
}

std::map<std::string, InvocationSeries> merge_days(
    const std::vector<std::vector<RawTraceRow>>& day_tables, Timestamp start) {
  const std::size_t num_days = day_tables.size();
  std::map<std::string, InvocationSeries> out;
  for (std::size_t day = 0; day < num_days; ++day) {
    std::set<std::string> seen;
    for (const RawTraceRow& row : day_tables[day]) {
      std::string id = row.function_id();
      if (!seen.insert(id).second) {
        throw Error(Errc::kDuplicateFunctionInDay,
                    id + " appears twice on day " + std::to_string(day + 1));
      }
      auto [it, inserted] = out.try_emplace(id);
      InvocationSeries& s = it->second;
      if (inserted) {
        s.function_id = std::move(id);
        s.granularity = Granularity::kMinute;
        s.start_time = start;
        s.values.assign(num_days * kMinutesPerDay, 0);
      }
      std::copy(row.minute_counts.begin(), row.minute_counts.end(),
                s.values.begin() + static_cast<std::ptrdiff_t>(day * kMinutesPerDay));
    }
  }
  return out;
}

InvocationSeries resample_to_hour(const InvocationSeries& s) {
  if (s.granularity != Granularity::kMinute) {
    throw Error(Errc::kWrongGranularity, s.function_id + " is not minute-level");
  }
  if (s.values.size() % 60 != 0) {
    throw Error(Errc::kLengthNotDivisible,
                std::to_string(s.values.size()) + " minutes is not a whole number of hours");
  }
  InvocationSeries out{s.function_id, Granularity::kHour, s.start_time, {}};
  out.values.resize(s.values.size() / 60, 0);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    out.values[i / 60] += s.values[i];
  }
  return out;
}

GapSeries to_gap_series(const InvocationSeries& s) {
  if (s.granularity != Granularity::kMinute) {
    throw Error(Errc::kWrongGranularity, s.function_id + " is not minute-level");
  }
  GapSeries out;
  out.function_id = s.function_id;
  std::int64_t previous = -1;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] == 0) {
      continue;
    }
    const auto idx = static_cast<std::int64_t>(i);
    if (previous < 0) {
      out.first_event_index = idx;
    } else {
      out.gaps.push_back(idx - previous);
    }
    previous = idx;
  }
  if (out.gaps.empty()) {
    throw Error(Errc::kTooFewEvents, s.function_id + " has fewer than 2 active minutes");
  }
  out.first_event_time = s.start_time + std::chrono::minutes(out.first_event_index);
  return out;
}

std::vector<SeriesWindow> split_series(const InvocationSeries& s,
                                       std::size_t context_length,
                                       std::size_t prediction_length,
                                       std::size_t stride) {
  const std::size_t width = context_length + prediction_length;
  if (stride == 0 || width == 0) {
    throw Error(Errc::kBadConfig, "stride and window width must be positive");
  }
  if (s.values.size() < width) {
    throw Error(Errc::kSeriesTooShort, std::to_string(s.values.size()) +
                                           " values, need " + std::to_string(width));
  }
  const std::size_t slack = s.values.size() - width;
  const std::size_t count = slack / stride + 1;
  std::vector<SeriesWindow> out;
  out.reserve(count);
  const std::span<const std::int64_t> all(s.values);
  for (std::size_t k = count; k-- > 0;) {
    const std::size_t start = slack - k * stride;
    out.push_back({start, all.subspan(start, context_length),
                   all.subspan(start + context_length, prediction_length)});
  }
  return out;
}

} // namespace coldstart::trace
