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

#include "coldstart/series_io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <string>

#include "coldstart/error.hpp"

namespace coldstart::trace {

void write_series_csv(std::ostream& out, const std::vector<InvocationSeries>& series) {
  std::size_t width = 0;
  for (const auto& s : series) {
    width = std::max(width, s.values.size());
  }
  out << "functionId,granularity,startTime";
  for (std::size_t i = 0; i < width; ++i) {
    out << ",v" << i;
  }
  out << '\n';
  for (const auto& s : series) {
    out << s.function_id << ',' << granularity_name(s.granularity) << ','
        << format_rfc3339(s.start_time);
    for (std::int64_t v : s.values) {
      out << ',' << v;
    }
    out << '\n';
  }
}

std::vector<InvocationSeries> read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("functionId,granularity,startTime", 0) != 0) {
    throw Error(Errc::kMalformedHeader, "not a canonical series CSV");
  }
  std::vector<InvocationSeries> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::istringstream fields(line);
    std::string id, gran, start, cell;
    if (!std::getline(fields, id, ',') || !std::getline(fields, gran, ',') ||
        !std::getline(fields, start, ',')) {
      throw Error(Errc::kParse, "row " + std::to_string(row) + " is truncated");
    }
    InvocationSeries s{id, parse_granularity(gran), parse_rfc3339(start), {}};
    while (std::getline(fields, cell, ',')) {
      if (cell.empty()) {
        continue;
      }
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || v < 0) {
        throw Error(Errc::kBadCount, "row " + std::to_string(row) + ": '" + cell + "'");
      }
      s.values.push_back(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json series_to_json(const InvocationSeries& s) {
  return {{"functionId", s.function_id},
          {"granularity", granularity_name(s.granularity)},
          {"startTime", format_rfc3339(s.start_time)},
          {"values", s.values}};
}

InvocationSeries series_from_json(const nlohmann::json& j) {
  try {
    InvocationSeries s;
    s.function_id = j.at("functionId").get<std::string>();
    s.granularity = parse_granularity(j.at("granularity").get<std::string>());
    s.start_time = parse_rfc3339(j.at("startTime").get<std::string>());
    s.values = j.at("values").get<std::vector<std::int64_t>>();
    if (std::any_of(s.values.begin(), s.values.end(), [](auto v) { return v < 0; })) {
      throw Error(Errc::kBadCount, s.function_id + " has a negative count");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, e.what());
  }
}

} // namespace coldstart::trace
