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

#include "coldstart/clustering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "coldstart/error.hpp"
#include "coldstart/kernels.hpp"

namespace coldstart::clustering {

double autocorrelation(const std::vector<std::int64_t>& values, std::size_t lag) {
  const std::size_t n = values.size();
  if (n <= lag || n == 0) {
    return 0.0;
  }
  double mean = 0.0;
  for (auto v : values) {
    mean += static_cast<double>(v);
  }
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = static_cast<double>(values[i]) - mean;
  }
  const std::span<const double> c(centered);
  const double denom = kernels::dot(c, c);
  if (denom <= 0.0) {
    return 0.0;
  }
  return kernels::dot(c.first(n - lag), c.subspan(lag)) / denom;
}

PatternFeatures compute_features(const trace::InvocationSeries& s) {
  if (s.granularity != trace::Granularity::kMinute) {
    throw Error(Errc::kWrongGranularity, s.function_id + " is not minute-level");
  }
  const std::size_t n = s.values.size();
  if (n < trace::kMinutesPerDay) {
    throw Error(Errc::kSeriesTooShort,
                s.function_id + " covers less than one day (" + std::to_string(n) + ")");
  }
  PatternFeatures f{s.function_id, std::vector<double>(kFeatureDim, 0.0), false};

  double total = 0.0, peak = 0.0;
  std::size_t active = 0;
  std::vector<double> gaps;
  std::int64_t previous = -1;
  const auto minute_of_day = static_cast<std::size_t>(
      (s.start_time.time_since_epoch().count() / 60) % trace::kMinutesPerDay);
  std::array<double, 24> by_hour{};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(s.values[i]);
    total += v;
    peak = std::max(peak, v);
    by_hour[((minute_of_day + i) / 60) % 24] += v;
    if (s.values[i] != 0) {
      ++active;
      if (previous >= 0) {
        gaps.push_back(static_cast<double>(static_cast<std::int64_t>(i) - previous));
      }
      previous = static_cast<std::int64_t>(i);
    }
  }
  f.vector[0] = std::log1p(total);
  f.vector[1] = static_cast<double>(active) / static_cast<double>(n);
  if (gaps.empty()) {
    f.vector[2] = static_cast<double>(n);
  } else {
    double mean = 0.0;
    for (double g : gaps) {
      mean += g;
    }
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) {
      var += (g - mean) * (g - mean);
    }
    var /= static_cast<double>(gaps.size());
    f.vector[2] = mean;
    f.vector[3] = std::sqrt(var) / mean;
    f.vector[4] = autocorrelation(s.values, 1440);
    f.vector[5] = autocorrelation(s.values, 60);
  }
  const double mean_count = total / static_cast<double>(n);
  f.vector[6] = mean_count > 0.0 ? peak / mean_count : 0.0;
  if (total > 0.0) {
    double h = 0.0;
    for (double c : by_hour) {
      if (c > 0.0) {
        const double p = c / total;
        h -= p * std::log(p);
      }
    }
    f.vector[7] = h;
  }
  return f;
}

std::vector<PatternFeatures> minmax_normalize(const std::vector<PatternFeatures>& features) {
  std::vector<PatternFeatures> out = features;
  if (features.empty()) {
    return out;
  }
  const std::size_t dim = features.front().vector.size();
  for (const auto& f : features) {
    if (f.vector.size() != dim) {
      throw Error(Errc::kDimensionMismatch, f.function_id + " has " +
                                                std::to_string(f.vector.size()) +
                                                " features, expected " + std::to_string(dim));
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& f : features) {
      lo = std::min(lo, f.vector[d]);
      hi = std::max(hi, f.vector[d]);
    }
    const double range = hi - lo;
    for (auto& f : out) {
      f.vector[d] = range > 0.0 ? (f.vector[d] - lo) / range : 0.0;
    }
  }
  for (auto& f : out) {
    f.normalized = true;
  }
  return out;
}

int ClusterAssignment::num_clusters() const {
  int k = 0;
  for (int l : labels) {
    k = std::max(k, l + 1);
  }
  return k;
}

ClusterAssignment dbscan(const std::vector<std::vector<double>>& points, double eps,
                         std::size_t min_pts) {
  if (!(eps > 0.0) || min_pts < 1) {
    throw Error(Errc::kBadConfig, "dbscan needs eps > 0 and minPts >= 1");
  }
  ClusterAssignment out{{}, eps, min_pts};
  const std::size_t n = points.size();
  if (n == 0) {
    return out;
  }
  const std::size_t dim = points[0].size();
  std::vector<double> flat;
  flat.reserve(n * dim);
  for (const auto& p : points) {
    if (p.size() != dim) {
      throw Error(Errc::kDimensionMismatch, "point of dimension " + std::to_string(p.size()) +
                                                ", expected " + std::to_string(dim));
    }
    flat.insert(flat.end(), p.begin(), p.end());
  }
  const std::span<const double> all(flat);
  auto region = [&](std::size_t p) {
    std::vector<std::size_t> hits;
    const auto a = all.subspan(p * dim, dim);
    for (std::size_t q = 0; q < n; ++q) {
      if (std::sqrt(kernels::squared_distance(a, all.subspan(q * dim, dim))) <= eps) {
        hits.push_back(q);
      }
    }
    return hits;
  };

  constexpr int kUnvisited = -2;
  out.labels.assign(n, kUnvisited);
  int cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (out.labels[p] != kUnvisited) {
      continue;
    }
    const auto neighbours = region(p);
    if (neighbours.size() < min_pts) {
      out.labels[p] = kNoise;
      continue;
    }
    out.labels[p] = cluster;
    std::deque<std::size_t> seeds(neighbours.begin(), neighbours.end());
    while (!seeds.empty()) {
      const std::size_t q = seeds.front();
      seeds.pop_front();
      if (out.labels[q] == kNoise) {
        out.labels[q] = cluster;
      }
      if (out.labels[q] != kUnvisited) {
        continue;
      }
      out.labels[q] = cluster;
      const auto more = region(q);
      if (more.size() >= min_pts) {
        seeds.insert(seeds.end(), more.begin(), more.end());
      }
    }
    ++cluster;
  }
  return out;
}

std::map<int, std::string> select_representatives(
    const ClusterAssignment& assignment, const std::vector<PatternFeatures>& features) {
  if (assignment.labels.size() != features.size()) {
    throw Error(Errc::kDimensionMismatch, "assignment and feature list differ in length");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (assignment.labels[i] != kNoise) {
      members[assignment.labels[i]].push_back(i);
    }
  }
  std::map<int, std::string> out;
  for (const auto& [id, idx] : members) {
    const std::size_t dim = features[idx[0]].vector.size();
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i : idx) {
      kernels::axpy(1.0 / static_cast<double>(idx.size()), features[i].vector, centroid);
    }
    double best = std::numeric_limits<double>::infinity();
    const std::string* best_id = nullptr;
    for (std::size_t i : idx) {
      const double d = kernels::squared_distance(features[i].vector, centroid);
      if (d < best || (d == best && features[i].function_id < *best_id)) {
        best = d;
        best_id = &features[i].function_id;
      }
    }
    out[id] = *best_id;
  }
  return out;
}

nlohmann::json clusters_to_json(const ClusterAssignment& assignment,
                                const std::vector<PatternFeatures>& features,
                                const std::map<int, std::string>& representatives) {
  nlohmann::json clusters = nlohmann::json::array();
  nlohmann::json noise = nlohmann::json::array();
  std::vector<std::vector<std::string>> members(
      static_cast<std::size_t>(assignment.num_clusters()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int l = assignment.labels[i];
    if (l == kNoise) {
      noise.push_back(features[i].function_id);
    } else {
      members[static_cast<std::size_t>(l)].push_back(features[i].function_id);
    }
  }
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto it = representatives.find(static_cast<int>(c));
    clusters.push_back({{"id", c},
                        {"memberIds", members[c]},
                        {"representativeId",
                         it == representatives.end() ? nlohmann::json(nullptr)
                                                     : nlohmann::json(it->second)}});
  }
  return {{"eps", assignment.eps},
          {"minPts", assignment.min_pts},
          {"clusters", clusters},
          {"noise", noise}};
}

} // namespace coldstart::clustering
