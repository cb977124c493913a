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

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace coldstart::metrics {

/// Mean of 2|f-a| / (|a|+|f|); a 0/0 term counts as 0. Range [0, 2].
double smape(std::span<const double> actual, std::span<const double> forecast);
double rmse(std::span<const double> actual, std::span<const double> forecast);
/// rmse / (max(actual) - min(actual)). Throws ZeroRange on constant actuals.
double normalized_rmse(std::span<const double> actual, std::span<const double> forecast);
/// Population-variance forms. Throw ZeroVariance on constant actuals.
double r2_score(std::span<const double> actual, std::span<const double> forecast);
double explained_variance(std::span<const double> actual, std::span<const double> forecast);
/// Pearson correlation of average ranks. Throws DegenerateRanks.
double spearman(std::span<const double> actual, std::span<const double> forecast);

/// 1-based ranks; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> x);

/// A metric value, or the reason it is undefined.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  bool ok() const { return value.has_value(); }
};

struct MetricReport {
  std::string model;
  std::string dataset;
  MetricValue smape;
  MetricValue explained_variance;
  MetricValue rmse;
  MetricValue normalized_rmse;
  MetricValue r2;
  MetricValue spearman;
  std::size_t n = 0;
};

/// Scores one aligned pair. Length errors throw; per-metric degeneracies
/// become null values with a reason.
MetricReport evaluate(std::span<const double> actual, std::span<const double> forecast,
                      std::string model = {}, std::string dataset = {});

/// Header: model,dataset,smape,explained_variance,rmse,normalized_rmse,r2,spearman,n.
/// Null metrics are written as empty cells.
void write_reports_csv(std::ostream& out, const std::vector<MetricReport>& reports);
nlohmann::json reports_to_json(const std::vector<MetricReport>& reports);

} // namespace coldstart::metrics
