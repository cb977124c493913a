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
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "coldstart/error.hpp"
#include "oracle/dbscan_reference.hpp"

namespace coldstart::clustering {
namespace {

using trace::Granularity;
using trace::InvocationSeries;

const trace::Timestamp kStart = trace::parse_rfc3339("2019-07-15T00:00:00Z");

InvocationSeries minute_series(std::vector<std::int64_t> values) {
  return {"fn", Granularity::kMinute, kStart, std::move(values)};
}

TEST(Features, AllZeroUsesSentinels) {
  const auto f = compute_features(minute_series(std::vector<std::int64_t>(2880, 0)));
  ASSERT_EQ(f.vector.size(), kFeatureDim);
  EXPECT_EQ(f.vector[0], 0.0);
  EXPECT_EQ(f.vector[1], 0.0);
  EXPECT_EQ(f.vector[2], 2880.0);
  EXPECT_EQ(f.vector[3], 0.0);
  EXPECT_EQ(f.vector[4], 0.0);
  EXPECT_EQ(f.vector[5], 0.0);
  EXPECT_EQ(f.vector[6], 0.0);
  EXPECT_EQ(f.vector[7], 0.0);
  EXPECT_FALSE(f.normalized);
}

TEST(Features, SingleEventUsesGapSentinels) {
  std::vector<std::int64_t> v(1440, 0);
  v[100] = 4;
  const auto f = compute_features(minute_series(v));
  EXPECT_DOUBLE_EQ(f.vector[0], std::log1p(4.0));
  EXPECT_EQ(f.vector[2], 1440.0);
  EXPECT_EQ(f.vector[3], 0.0);
  EXPECT_EQ(f.vector[4], 0.0);
  EXPECT_DOUBLE_EQ(f.vector[6], 1440.0);
  EXPECT_EQ(f.vector[7], 0.0); // a single hour bucket
}

TEST(Features, EveryMinute) {
  const auto f = compute_features(minute_series(std::vector<std::int64_t>(1440, 1)));
  EXPECT_EQ(f.vector[1], 1.0);
  EXPECT_EQ(f.vector[2], 1.0);
  EXPECT_EQ(f.vector[3], 0.0);
  EXPECT_DOUBLE_EQ(f.vector[6], 1.0);
  EXPECT_NEAR(f.vector[7], std::log(24.0), 1e-12);
}

double direct_autocorrelation(const std::vector<std::int64_t>& x, std::size_t lag) {
  double m = 0.0;
  for (auto v : x) {
    m += static_cast<double>(v);
  }
  m /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - m) * (x[t] - m);
    if (t + lag < x.size()) {
      num += (x[t] - m) * (x[t + lag] - m);
    }
  }
  return num / den;
}

TEST(Features, DailyPeriodicAutocorrelationMatchesDirectSum) {
  std::mt19937_64 rng(10);
  std::vector<std::int64_t> day(1440);
  for (auto& v : day) {
    v = rng() % 5 == 0 ? static_cast<std::int64_t>(rng() % 7) : 0;
  }
  std::vector<std::int64_t> values;
  for (int d = 0; d < 7; ++d) {
    values.insert(values.end(), day.begin(), day.end());
  }
  const auto f = compute_features(minute_series(values));
  EXPECT_NEAR(f.vector[4], direct_autocorrelation(values, 1440), 1e-6);
  EXPECT_NEAR(f.vector[5], direct_autocorrelation(values, 60), 1e-6);
  // 6 of 7 days overlap at lag 1440.
  EXPECT_NEAR(f.vector[4], 6.0 / 7.0, 1e-9);
}

TEST(Features, ShortSeriesRejected) {
  EXPECT_THROW(compute_features(minute_series(std::vector<std::int64_t>(100, 1))), Error);
}

TEST(Normalize, SinglePointIsZero) {
  const auto out = minmax_normalize({{"a", {3.0, -1.0, 7.0}, false}});
  EXPECT_EQ(out[0].vector, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_TRUE(out[0].normalized);
}

TEST(Normalize, TwoPoints) {
  const auto out = minmax_normalize({{"a", {3.0, 5.0}, false}, {"b", {1.0, 9.0}, false}});
  EXPECT_EQ(out[0].vector, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(out[1].vector, (std::vector<double>{0.0, 1.0}));
}

TEST(Normalize, RandomPopulationSpansUnitInterval) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 10.0);
  std::vector<PatternFeatures> pop;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> v(kFeatureDim);
    for (auto& x : v) {
      x = g(rng);
    }
    v[3] = 2.5; // constant coordinate
    pop.push_back({"f" + std::to_string(i), v, false});
  }
  const auto out = minmax_normalize(pop);
  for (std::size_t d = 0; d < kFeatureDim; ++d) {
    double lo = 1e9, hi = -1e9;
    for (const auto& f : out) {
      lo = std::min(lo, f.vector[d]);
      hi = std::max(hi, f.vector[d]);
    }
    if (d == 3) {
      EXPECT_EQ(lo, 0.0);
      EXPECT_EQ(hi, 0.0);
    } else {
      EXPECT_EQ(lo, 0.0);
      EXPECT_EQ(hi, 1.0);
    }
  }
}

TEST(Dbscan, ToyOneDimensional) {
  const auto a = dbscan({{0.0}, {0.5}, {10.0}}, 1.0, 2);
  EXPECT_EQ(a.labels, (std::vector<int>{0, 0, -1}));
  const auto ref = oracle::dbscan_reference({{0.0}, {0.5}, {10.0}}, 1.0, 2);
  EXPECT_EQ(oracle::compare_with_reference(ref, a.labels), "");
}

TEST(Dbscan, EmptyAndIdentical) {
  EXPECT_TRUE(dbscan({}, 0.5, 3).labels.empty());
  const auto a = dbscan({{1, 2}, {1, 2}, {1, 2}}, 0.1, 1);
  EXPECT_EQ(a.labels, (std::vector<int>{0, 0, 0}));
}

TEST(Dbscan, InclusiveNeighbourhood) {
  // Distance exactly eps counts.
  EXPECT_EQ(dbscan({{0.0}, {1.0}}, 1.0, 2).labels, (std::vector<int>{0, 0}));
}

TEST(Dbscan, Errors) {
  EXPECT_THROW(dbscan({{0.0}, {1.0, 2.0}}, 1.0, 1), Error);
  EXPECT_THROW(dbscan({{0.0}}, 0.0, 1), Error);
}

std::vector<std::vector<double>> blobs(std::mt19937_64& rng, std::size_t n,
                                       std::size_t dim) {
  std::normal_distribution<double> g(0.0, 0.15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> centers(1 + rng() % 4, std::vector<double>(dim));
  for (auto& c : centers) {
    for (auto& x : c) {
      x = u(rng);
    }
  }
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    if (rng() % 5 == 0) {
      for (auto& x : p) {
        x = u(rng);
      }
    } else {
      const auto& c = centers[rng() % centers.size()];
      for (std::size_t d = 0; d < dim; ++d) {
        p[d] = c[d] + g(rng);
      }
    }
  }
  return pts;
}

TEST(Dbscan, MatchesReferenceAndIsPermutationInvariant) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t dim = 1 + rng() % 8;
    auto pts = blobs(rng, 10 + rng() % 90, dim);
    const double eps = 0.05 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng);
    const std::size_t min_pts = 1 + rng() % 6;
    const auto ref = oracle::dbscan_reference(pts, eps, min_pts);
    const auto a = dbscan(pts, eps, min_pts);
    ASSERT_EQ(oracle::compare_with_reference(ref, a.labels), "") << "trial " << trial;

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> shuffled;
    for (auto i : perm) {
      shuffled.push_back(pts[i]);
    }
    const auto b = dbscan(shuffled, eps, min_pts);
    std::vector<int> back(pts.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
      back[perm[k]] = b.labels[k];
    }
    // Same partition up to relabelling on core and unambiguous points.
    std::map<int, int> relabel;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (ref.reachable_from[i].size() > 1) {
        continue;
      }
      if (a.labels[i] == kNoise) {
        EXPECT_EQ(back[i], kNoise);
        continue;
      }
      auto [it, fresh] = relabel.try_emplace(a.labels[i], back[i]);
      EXPECT_EQ(it->second, back[i]);
    }
  }
}

TEST(Dbscan, NoisePointsAreSparseOrUnreachable) {
  std::mt19937_64 rng(31);
  auto pts = blobs(rng, 120, 3);
  const auto a = dbscan(pts, 0.12, 5);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (a.labels[i] != kNoise) {
      continue;
    }
    std::size_t count = 0;
    bool near_core = false;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (oracle::euclid(pts[i], pts[j]) <= 0.12) {
        ++count;
        std::size_t cj = 0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
          cj += oracle::euclid(pts[j], pts[k]) <= 0.12;
        }
        near_core = near_core || cj >= 5;
      }
    }
    EXPECT_LT(count, 5u);
    EXPECT_FALSE(near_core);
  }
}

TEST(Representatives, SingleMemberAndTie) {
  std::vector<PatternFeatures> f{{"solo", {5.0}, true}, {"zeta", {0.0}, true},
                                 {"alpha", {2.0}, true}};
  ClusterAssignment a{{0, 1, 1}, 1.0, 1};
  const auto reps = select_representatives(a, f);
  EXPECT_EQ(reps.at(0), "solo");
  EXPECT_EQ(reps.at(1), "alpha");
}

TEST(Representatives, MatchesExhaustiveScan) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PatternFeatures> f;
    for (int i = 0; i < 20; ++i) {
      f.push_back({"f" + std::to_string(100 + i), {u(rng), u(rng), u(rng)}, true});
    }
    ClusterAssignment a{std::vector<int>(20, 0), 1.0, 1};
    std::vector<double> c(3, 0.0);
    for (const auto& p : f) {
      for (int d = 0; d < 3; ++d) {
        c[d] += p.vector[d] / 20.0;
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (oracle::euclid(f[i].vector, c) < oracle::euclid(f[best].vector, c)) {
        best = i;
      }
    }
    EXPECT_EQ(select_representatives(a, f).at(0), f[best].function_id);
  }
}

TEST(Representatives, AlwaysAMember) {
  std::mt19937_64 rng(41);
  auto pts = blobs(rng, 80, 2);
  std::vector<PatternFeatures> f;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    f.push_back({"id" + std::to_string(i), pts[i], true});
  }
  const auto a = dbscan(pts, 0.1, 3);
  for (const auto& [cluster, id] : select_representatives(a, f)) {
    const auto it = std::find_if(f.begin(), f.end(),
                                 [&](const PatternFeatures& p) { return p.function_id == id; });
    ASSERT_NE(it, f.end());
    EXPECT_EQ(a.labels[static_cast<std::size_t>(it - f.begin())], cluster);
  }
}

TEST(ClusterJson, Shape) {
  std::vector<PatternFeatures> f{{"a", {0.0}, true}, {"b", {0.1}, true}, {"c", {9.0}, true}};
  const auto a = dbscan({{0.0}, {0.1}, {9.0}}, 0.5, 2);
  const auto j = clusters_to_json(a, f, select_representatives(a, f));
  EXPECT_EQ(j["minPts"], 2);
  EXPECT_EQ(j["clusters"].size(), 1u);
  EXPECT_EQ(j["clusters"][0]["memberIds"], nlohmann::json({"a", "b"}));
  EXPECT_EQ(j["clusters"][0]["representativeId"], "a");
  EXPECT_EQ(j["noise"], nlohmann::json({"c"}));
}

} // namespace
} // namespace coldstart::clustering
