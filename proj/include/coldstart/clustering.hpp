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

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/trace.hpp"

namespace coldstart::clustering {

inline constexpr std::size_t kFeatureDim = 8;

/// Feature layout:
///   0 log1p(total invocations)
///   1 fraction of active minutes
///   2 mean gap in minutes          (series length when < 2 events)
///   3 coefficient of variation of gaps (0 when < 2 events)
///   4 autocorrelation at lag 1440  (0 when < 2 events)
///   5 autocorrelation at lag 60    (0 when < 2 events)
///   6 peak-to-mean ratio of the per-minute counts (0 for an empty series)
///   7 entropy (nats) of the hour-of-day invocation histogram
struct PatternFeatures {
  std::string function_id;
  std::vector<double> vector;
  bool normalized = false;
};

/// Sample autocorrelation sum_{t}(x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2,
/// 0 when the series is constant or not longer than the lag.
double autocorrelation(const std::vector<std::int64_t>& values, std::size_t lag);

/// Requires a minute-level series of at least one day.
PatternFeatures compute_features(const trace::InvocationSeries& s);

/// Per-coordinate (x - min) / (max - min); zero-range coordinates map to 0.
std::vector<PatternFeatures> minmax_normalize(const std::vector<PatternFeatures>& features);

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> labels; // kNoise or 0..K-1, aligned with the input
  double eps = 0.0;
  std::size_t min_pts = 1;

  int num_clusters() const;
};

/// DBSCAN with an inclusive Euclidean eps-neighbourhood that counts the point
/// itself. Points are scanned in input order; a border point joins the first
/// cluster that reaches it.
ClusterAssignment dbscan(const std::vector<std::vector<double>>& points, double eps,
                         std::size_t min_pts);

/// Per cluster, the member nearest to the centroid (ties: smallest id).
std::map<int, std::string> select_representatives(
    const ClusterAssignment& assignment, const std::vector<PatternFeatures>& features);

nlohmann::json clusters_to_json(const ClusterAssignment& assignment,
                                const std::vector<PatternFeatures>& features,
                                const std::map<int, std::string>& representatives);

} // namespace coldstart::clustering
