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

// Canonical series interchange:
//   CSV:  functionId,granularity,startTime,v0,...,vN  (one series per row)
//   JSON: {"functionId", "granularity", "startTime", "values": [...]}

#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "coldstart/trace.hpp"

namespace coldstart::trace {

void write_series_csv(std::ostream& out, const std::vector<InvocationSeries>& series);
std::vector<InvocationSeries> read_series_csv(std::istream& in);

nlohmann::json series_to_json(const InvocationSeries& s);
InvocationSeries series_from_json(const nlohmann::json& j);

} // namespace coldstart::trace
