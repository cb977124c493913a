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

#include "coldstart/simulator.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "coldstart/error.hpp"
#include "oracle/replay_reference.hpp"

namespace coldstart::simulator {
namespace {

using policy::PolicySpec;

std::vector<double> every(double gap, std::size_t n, double start = 0.0) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(start + gap * static_cast<double>(i));
  }
  return out;
}

forecaster::ForecastDistribution point(double v) {
  return forecaster::make_distribution(3, 1, {v, v, v});
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kIo;
}

TEST(Simulate, ElevenMinuteGapsAreAllCold) {
  const auto r = simulate(every(11, 10), policy::fixed_window(10), {});
  EXPECT_EQ(r.invocations, 10u);
  EXPECT_EQ(r.cold_starts, 10u);
  EXPECT_EQ(*r.cold_starts_per_100, 100.0);
  EXPECT_EQ(r.evictions.size(), 10u);
  EXPECT_TRUE(r.short_trace);
}

TEST(Simulate, FiveMinuteGapsReuseOneContainer) {
  const auto r = simulate(every(5, 10), policy::fixed_window(10), {});
  EXPECT_EQ(r.cold_starts, 1u);
  EXPECT_EQ(r.warm_starts, 9u);
  EXPECT_EQ(r.containers_created, 1u);
  EXPECT_EQ(*r.cold_starts_per_100, 10.0);
  ASSERT_EQ(r.evictions.size(), 1u);
  EXPECT_EQ(r.evictions[0].time_ms, 45 * kMsPerMinute + 100.0 + 10 * kMsPerMinute);
}

TEST(Simulate, EmptyTrace) {
  const auto r = simulate({}, policy::fixed_window(), {});
  EXPECT_EQ(r.invocations, 0u);
  EXPECT_EQ(r.cold_starts, 0u);
  EXPECT_TRUE(r.empty_trace);
  EXPECT_FALSE(r.cold_starts_per_100.has_value());
  EXPECT_TRUE(result_to_json(r)["coldStartsPer100"].is_null());
}

TEST(Simulate, Errors) {
  EXPECT_EQ(code_of([] { simulate(std::vector<double>{3, 2}, policy::fixed_window(), {}); }),
            Errc::kUnsortedEvents);
  EXPECT_EQ(code_of([] {
              simulate(std::vector<double>{1, 2}, policy::adaptive_window_policy(), {});
            }),
            Errc::kMissingForecaster);
  EXPECT_EQ(code_of([] { simulate(std::vector<double>{1}, policy::prewarm_policy(), {}); }),
            Errc::kMissingForecaster);
  LatencyModel bad;
  bad.cold_start_ms = 1.0;
  EXPECT_EQ(code_of([&] { simulate(std::vector<double>{1}, policy::fixed_window(), bad); }),
            Errc::kBadConfig);
}

TEST(Simulate, LatenciesAndSingleLifecycleCost) {
  LatencyModel lat{700.0, 20.0, 250.0};
  for (double w : {1.0, 10.0, 37.5}) {
    const auto r = simulate(std::vector<double>{42.0}, policy::fixed_window(w), lat);
    EXPECT_DOUBLE_EQ(r.container_minutes, (lat.exec_ms + w * 60000.0) / 60000.0);
    ASSERT_EQ(r.latencies.size(), 1u);
    EXPECT_EQ(r.latencies[0], 950.0);
  }
  const auto warm = simulate(every(2, 3), policy::fixed_window(), lat);
  EXPECT_EQ(warm.latencies, (std::vector<double>{950.0, 270.0, 270.0}));
  EXPECT_DOUBLE_EQ(warm.mean_latency_ms(), (950.0 + 540.0) / 3.0);
}

TEST(Simulate, ExpiryInstantStillServes) {
  // Idle from 0:00.100 for exactly 10 minutes; the arrival lands on the expiry.
  const std::vector<double> events{0.0, 10.0 + 100.0 / kMsPerMinute};
  const auto r = simulate(events, policy::fixed_window(10), {});
  EXPECT_EQ(r.cold_starts, 1u);
  const std::vector<double> late{0.0, 10.0 + 101.0 / kMsPerMinute};
  EXPECT_EQ(simulate(late, policy::fixed_window(10), {}).cold_starts, 2u);
}

TEST(Simulate, CompletionBeforeArrivalAtSameInstant) {
  LatencyModel lat{500.0, 5.0, 60000.0}; // one-minute executions
  const auto r = simulate(std::vector<double>{0, 1, 2}, policy::fixed_window(), lat);
  EXPECT_EQ(r.cold_starts, 1u);
}

TEST(Simulate, ConcurrentArrivalsEachNeedAContainer) {
  const auto r = simulate(std::vector<double>{5, 5, 5, 6}, policy::fixed_window(), {});
  EXPECT_EQ(r.cold_starts, 3u);
  EXPECT_EQ(r.containers_created, 3u);
  EXPECT_EQ(r.warm_starts + r.cold_starts, r.invocations);
}

TEST(Simulate, AdaptiveFallsBackWithoutForecast) {
  ForecasterHook hook;
  hook.next_gap = [](std::size_t i) -> std::optional<forecaster::ForecastDistribution> {
    if (i < 2) {
      return std::nullopt;
    }
    return point(20.0);
  };
  const auto r = simulate(every(15, 6), policy::adaptive_window_policy(), {}, hook);
  ASSERT_EQ(r.window_log.size(), 6u);
  EXPECT_EQ(r.window_log[0].window_minutes, 10.0);
  EXPECT_EQ(r.window_log[1].window_minutes, 10.0);
  EXPECT_DOUBLE_EQ(r.window_log[2].window_minutes, 24.0);
  // Arrivals 1 and 2 find the 10-minute container gone; the rest are warm.
  EXPECT_EQ(r.cold, (std::vector<bool>{true, true, true, false, false, false}));
}

TEST(Simulate, PrewarmMakesFirstArrivalWarm) {
  ForecasterHook hook;
  hook.prewarm_plan = [] {
    return std::vector<policy::PrewarmPlan>{{1, 1, 2, 60.0}};
  };
  const auto r = simulate(std::vector<double>{60.0, 60.0, 60.0, 61.0},
                          policy::prewarm_policy(0.9, 4), {}, hook);
  EXPECT_EQ(r.cold, (std::vector<bool>{false, false, true, false}));
  EXPECT_EQ(r.containers_created, 3u);
}

TEST(Simulate, PerfectForesightSingleColdStart) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> events{static_cast<double>(rng() % 100)};
    const std::size_t n = 1 + rng() % 1000;
    for (std::size_t i = 1; i < n; ++i) {
      events.push_back(events.back() + 1.0 + static_cast<double>(rng() % 3000));
    }
    const auto r = simulate(events, policy::perfect_foresight_policy(), {});
    EXPECT_EQ(r.cold_starts, 1u) << "trial " << trial;
  }
}

TEST(Compare, OracleVersusFixed) {
  const auto events = every(11, 100);
  const auto rows = compare(events, {{policy::fixed_window(10), {}},
                                     {policy::perfect_foresight_policy(), {}}},
                            {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].cold_starts, 100u);
  EXPECT_EQ(rows[1].cold_starts, 1u);
  EXPECT_DOUBLE_EQ(cold_start_reduction(rows[0], rows[1]), 99.0);
  EXPECT_FALSE(rows[0].short_trace);
  EXPECT_EQ(code_of([&] { compare(events, {{policy::fixed_window(), {}}}, {}); }),
            Errc::kBadConfig);
}

TEST(Compare, SelfAndLatencyIndependence) {
  std::mt19937_64 rng(4);
  std::vector<double> events{0};
  for (int i = 0; i < 150; ++i) {
    events.push_back(events.back() + static_cast<double>(rng() % 25));
  }
  const auto rows = compare(events, {{policy::fixed_window(), {}}, {policy::fixed_window(), {}}},
                            {});
  EXPECT_EQ(rows[0], rows[1]);
  const auto a = simulate(events, policy::fixed_window(), {500, 5, 100});
  const auto b = simulate(events, policy::fixed_window(), {3000, 50, 100});
  EXPECT_EQ(a.cold_starts, b.cold_starts);
  EXPECT_NE(a.mean_latency_ms(), b.mean_latency_ms());
}

TEST(Reduction, Examples) {
  SimulationResult base, cand;
  base.cold_starts = 66;
  cand.cold_starts = 14;
  EXPECT_NEAR(cold_start_reduction(base, cand), 78.8, 0.05);
  EXPECT_EQ(format_reduction(cold_start_reduction(base, cand)), "79%");
  base.cold_starts = 100;
  cand.cold_starts = 45;
  EXPECT_EQ(cold_start_reduction(base, cand), 55.0);
  EXPECT_EQ(format_reduction(55.0), "55%");
  EXPECT_EQ(cold_start_reduction(base, base), 0.0);
  base.cold_starts = 0;
  EXPECT_EQ(code_of([&] { cold_start_reduction(base, cand); }), Errc::kZeroBaseline);
}

TEST(Simulate, MonotoneInFixedWindow) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> events{0};
    const std::size_t n = 1 + rng() % 200;
    for (std::size_t i = 1; i < n; ++i) {
      events.push_back(events.back() + 1.0 + static_cast<double>(rng() % 40));
    }
    std::size_t previous = events.size() + 1;
    for (double w = 1.0; w <= 45.0; w += 2.0) {
      const std::size_t cold = simulate(events, policy::fixed_window(w), {}).cold_starts;
      EXPECT_LE(cold, previous);
      previous = cold;
    }
  }
}

TEST(Simulate, Deterministic) {
  ForecasterHook hook;
  hook.next_gap = [](std::size_t i) { return point(3.0 + static_cast<double>(i % 7)); };
  const auto events = every(4.5, 80);
  const auto a = simulate(events, policy::adaptive_window_policy(), {}, hook, "f");
  const auto b = simulate(events, policy::adaptive_window_policy(), {}, hook, "f");
  EXPECT_EQ(a, b);
  EXPECT_EQ(result_to_json(a).dump(), result_to_json(b).dump());
}

// Random sparse traces with bursts, random policies and random prewarm plans,
// replayed by the engine and by the straight-line interpreter.
TEST(Simulate, MatchesStraightLineReplay) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<double> events;
    double t = static_cast<double>(rng() % 30);
    const std::size_t n = rng() % 201;
    for (std::size_t i = 0; i < n; ++i) {
      events.push_back(t);
      const auto r = rng() % 10;
      t += r == 0 ? 0.0 : (r < 3 ? 0.25 * static_cast<double>(rng() % 4)
                                 : static_cast<double>(rng() % 30));
    }
    LatencyModel lat;
    lat.exec_ms = 1.0 + static_cast<double>(rng() % 90000);

    PolicySpec spec;
    ForecasterHook hook;
    std::vector<double> decisions(n);
    std::vector<oracle::ReplayPlan> plans;
    const double base = 1.0 + static_cast<double>(rng() % 20);
    switch (rng() % 4) {
      case 0:
        spec = policy::fixed_window(base);
        std::fill(decisions.begin(), decisions.end(), base);
        break;
      case 1: {
        spec = policy::adaptive_window_policy(0.9, 1.5, 2.0, 30.0);
        spec.fixed_minutes = base;
        std::vector<double> gaps(n);
        for (std::size_t i = 0; i < n; ++i) {
          const bool missing = rng() % 5 == 0;
          gaps[i] = missing ? -1.0 : static_cast<double>(rng() % 40);
          decisions[i] = missing ? base : std::clamp(1.5 * gaps[i], 2.0, 30.0);
        }
        hook.next_gap = [gaps](std::size_t i) -> std::optional<forecaster::ForecastDistribution> {
          if (gaps[i] < 0.0) {
            return std::nullopt;
          }
          return point(gaps[i]);
        };
        break;
      }
      case 2: {
        spec = policy::prewarm_policy(0.9, 4);
        spec.fixed_minutes = base;
        std::fill(decisions.begin(), decisions.end(), base);
        const double step = rng() % 2 == 0 ? 1.0 : 15.0;
        std::vector<policy::PrewarmPlan> p;
        const auto last = static_cast<std::int64_t>(t / step) + 2;
        for (std::int64_t s = 0; s <= last; ++s) {
          if (rng() % 3 == 0) {
            p.push_back({s, 1, static_cast<int>(rng() % 4), step});
            plans.push_back({p.back().start_minutes(), step, p.back().pool_size});
          }
        }
        hook.prewarm_plan = [p] { return p; };
        break;
      }
      default: {
        spec = policy::perfect_foresight_policy(1.0, 1.0 + static_cast<double>(rng() % 60));
        for (std::size_t i = 0; i < n; ++i) {
          decisions[i] = i + 1 < n ? std::min(std::max(events[i + 1] - events[i] + 0.01, 1.0),
                                              spec.max_window)
                                   : 1.0;
        }
        break;
      }
    }
    const double initial = spec.fixed_minutes;

    const SimulationResult got = simulate(events, spec, lat, hook);
    const oracle::ReplayResult want = oracle::replay(events, decisions, initial, lat.exec_ms, plans);
    ASSERT_EQ(got.cold_starts, want.cold_starts) << "trial " << trial;
    EXPECT_EQ(got.cold, want.cold) << "trial " << trial;
    EXPECT_EQ(got.containers_created, want.containers) << "trial " << trial;
    std::vector<std::pair<double, std::size_t>> evictions;
    for (const Eviction& e : got.evictions) {
      evictions.push_back({e.time_ms, e.container});
    }
    std::sort(evictions.begin(), evictions.end());
    EXPECT_EQ(evictions, want.evictions) << "trial " << trial;
    EXPECT_NEAR(got.container_minutes, want.container_minutes, 1e-9 * (1 + want.container_minutes));
    EXPECT_EQ(got.warm_starts + got.cold_starts, got.invocations);
  }
}

TEST(Reports, JsonAndCsv) {
  const auto r = simulate(every(5, 4), policy::fixed_window(), {}, {}, "o:a:f");
  const nlohmann::json j = result_to_json(r);
  for (const char* key : {"functionId", "policy", "invocations", "coldStarts", "coldStartsPer100",
                          "meanLatencyMs", "p99LatencyMs", "containerMinutes", "windowLog"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["coldStartsPer100"], 25.0);
  EXPECT_EQ(j["windowLog"].size(), 4u);
  std::ostringstream csv;
  write_summary_csv(csv, {summarize(r, "OpenWhisk")});
  EXPECT_EQ(csv.str(), "function,platform,icw_min,icw_max,cs_per_100\no:a:f,OpenWhisk,10,10,25\n");
  std::ostringstream plot;
  write_plot_csv(plot, {r});
  std::string header;
  std::istringstream in(plot.str());
  std::getline(in, header);
  EXPECT_EQ(header, "function,policy,invocation,time_minutes,window_minutes,cold,"
                    "cumulative_cold_starts");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "o:a:f,fixed(10),0,0,10,1,1");
}

TEST(FirstInvocations, Truncates) {
  const auto events = every(1, 250);
  EXPECT_EQ(first_invocations(events).size(), 100u);
  EXPECT_EQ(first_invocations(std::vector<double>{1, 2}).size(), 2u);
}

} // namespace
} // namespace coldstart::simulator
