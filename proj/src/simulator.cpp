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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>

#include "coldstart/error.hpp"

namespace coldstart::simulator {

namespace {

using policy::PolicyKind;

// Processing order of equal-time events.
enum class EventKind { kPrewarm = 0, kCompletion = 1, kArrival = 2, kEviction = 3 };

struct Event {
  double time_ms;
  EventKind kind;
  std::size_t seq;     // insertion order, the final tie-break
  std::size_t target;  // arrival index, plan index or container id
  std::size_t generation;

  bool operator>(const Event& o) const {
    if (time_ms != o.time_ms) {
      return time_ms > o.time_ms;
    }
    if (kind != o.kind) {
      return kind > o.kind;
    }
    return seq > o.seq;
  }
};

struct Container {
  ContainerState s;
  std::size_t generation = 0; // bumped whenever a pending eviction is cancelled
  double death_ms = 0.0;
};

class Engine {
 public:
  Engine(std::span<const double> events, const policy::PolicySpec& policy,
         const LatencyModel& latency, const ForecasterHook& hook)
      : events_(events), policy_(policy), latency_(latency), hook_(hook),
        window_(policy.fixed_minutes) {
    if (policy_.kind == PolicyKind::kPerfectForesight) {
      oracle_ = policy::perfect_foresight(events_, policy_);
    }
  }

  SimulationResult run() {
    for (std::size_t i = 0; i < events_.size(); ++i) {
      push(events_[i] * kMsPerMinute, EventKind::kArrival, i);
    }
    plans_ = prewarm_plans();
    for (std::size_t p = 0; p < plans_.size(); ++p) {
      push(plans_[p].start_minutes() * kMsPerMinute, EventKind::kPrewarm, p);
    }
    while (!queue_.empty()) {
      const Event e = queue_.top();
      queue_.pop();
      now_ = e.time_ms;
      switch (e.kind) {
        case EventKind::kPrewarm: on_prewarm(plans_[e.target]); break;
        case EventKind::kCompletion: on_completion(e.target); break;
        case EventKind::kArrival: on_arrival(e.target); break;
        case EventKind::kEviction: on_eviction(e.target, e.generation); break;
      }
    }
    for (Container& c : containers_) {
      if (c.s.state != ContainerStatus::kEvicted) {
        c.death_ms = now_; // an unbounded window never expires
      }
      result_.container_minutes += (c.death_ms - c.s.created_ms) / kMsPerMinute;
    }
    result_.containers_created = containers_.size();
    return std::move(result_);
  }

 private:
  std::vector<policy::PrewarmPlan> prewarm_plans() const {
    if (policy_.uses_prewarm()) {
      return hook_.prewarm_plan();
    }
    if (policy_.kind == PolicyKind::kPerfectForesight && policy_.oracle_prewarm) {
      return policy::perfect_prewarm(events_, 1.0, policy_.max_pool);
    }
    return {};
  }

  void push(double time_ms, EventKind kind, std::size_t target, std::size_t generation = 0) {
    queue_.push({time_ms, kind, seq_++, target, generation});
  }

  std::size_t create(ContainerStatus state) {
    Container c;
    c.s.id = containers_.size();
    c.s.state = state;
    c.s.created_ms = now_;
    containers_.push_back(c);
    return c.s.id;
  }

  void go_idle(std::size_t id, double window) {
    Container& c = containers_[id];
    c.s.state = ContainerStatus::kWarmIdle;
    c.s.idle_since_ms = now_;
    c.s.current_window = window;
    if (std::isfinite(window)) {
      push(now_ + window * kMsPerMinute, EventKind::kEviction, id, c.generation);
    }
  }

  void on_prewarm(const policy::PrewarmPlan& plan) {
    const auto idle = static_cast<int>(std::count_if(
        containers_.begin(), containers_.end(),
        [](const Container& c) { return c.s.state == ContainerStatus::kWarmIdle; }));
    const double window = std::max(window_, plan.length_minutes());
    for (int k = idle; k < plan.pool_size; ++k) {
      go_idle(create(ContainerStatus::kPrewarming), window);
    }
  }

  void on_completion(std::size_t id) { go_idle(id, window_); }

  void on_arrival(std::size_t index) {
    std::optional<std::size_t> pick;
    for (const Container& c : containers_) {
      if (c.s.state != ContainerStatus::kWarmIdle) {
        continue;
      }
      if (!pick || c.s.idle_since_ms > containers_[*pick].s.idle_since_ms) {
        pick = c.s.id;
      }
    }
    const bool cold = !pick;
    std::size_t id = 0;
    if (cold) {
      id = create(ContainerStatus::kBusy);
      ++result_.cold_starts;
    } else {
      id = *pick;
      ++containers_[id].generation;
      ++result_.warm_starts;
    }
    containers_[id].s.state = ContainerStatus::kBusy;
    ++result_.invocations;
    result_.cold.push_back(cold);
    result_.latencies.push_back((cold ? latency_.cold_start_ms : latency_.warm_start_ms) +
                                latency_.exec_ms);
    push(now_ + latency_.exec_ms, EventKind::kCompletion, id);

    replan(index);
    result_.window_log.push_back({events_[index], window_});
  }

  void replan(std::size_t index) {
    if (policy_.kind == PolicyKind::kPerfectForesight) {
      window_ = oracle_[index].window_minutes;
    } else if (policy_.uses_adaptive_window()) {
      const auto forecast = hook_.next_gap(index);
      window_ = forecast ? policy::adaptive_window(*forecast, policy_, index).window_minutes
                         : policy_.fixed_minutes;
    }
  }

  void on_eviction(std::size_t id, std::size_t generation) {
    Container& c = containers_[id];
    if (c.generation != generation || c.s.state != ContainerStatus::kWarmIdle) {
      return;
    }
    c.s.state = ContainerStatus::kEvicted;
    c.death_ms = now_;
    result_.evictions.push_back({id, now_});
  }

  std::span<const double> events_;
  const policy::PolicySpec& policy_;
  const LatencyModel& latency_;
  const ForecasterHook& hook_;
  double window_;
  std::vector<policy::IdleWindowDecision> oracle_;
  std::vector<policy::PrewarmPlan> plans_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::vector<Container> containers_;
  std::size_t seq_ = 0;
  double now_ = 0.0;
  SimulationResult result_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void LatencyModel::validate() const {
  if (!(cold_start_ms >= 0.0 && warm_start_ms >= 0.0 && exec_ms >= 0.0) ||
      !std::isfinite(cold_start_ms + warm_start_ms + exec_ms)) {
    throw Error(Errc::kBadConfig, "latencies must be finite and non-negative");
  }
  if (cold_start_ms < warm_start_ms) {
    throw Error(Errc::kBadConfig, "coldStartMs must be >= warmStartMs");
  }
}

nlohmann::json latency_to_json(const LatencyModel& m) {
  return {{"coldStartMs", m.cold_start_ms}, {"warmStartMs", m.warm_start_ms},
          {"execMs", m.exec_ms}};
}

LatencyModel latency_from_json(const nlohmann::json& j) {
  LatencyModel m;
  try {
    m.cold_start_ms = j.value("coldStartMs", m.cold_start_ms);
    m.warm_start_ms = j.value("warmStartMs", m.warm_start_ms);
    m.exec_ms = j.value("execMs", m.exec_ms);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadConfig, std::string("latency: ") + e.what());
  }
  m.validate();
  return m;
}

double SimulationResult::mean_latency_ms() const {
  if (latencies.empty()) {
    return 0.0;
  }
  return std::accumulate(latencies.begin(), latencies.end(), 0.0) /
         static_cast<double>(latencies.size());
}

double SimulationResult::p99_latency_ms() const {
  if (latencies.empty()) {
    return 0.0;
  }
  std::vector<double> v = latencies;
  std::sort(v.begin(), v.end());
  const double pos = 0.99 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

SimulationResult simulate(std::span<const double> event_minutes, const policy::PolicySpec& policy,
                          const LatencyModel& latency, const ForecasterHook& hook,
                          const std::string& function_id) {
  policy.validate();
  latency.validate();
  for (std::size_t i = 0; i < event_minutes.size(); ++i) {
    if (!std::isfinite(event_minutes[i])) {
      throw Error(Errc::kUnsortedEvents, "event " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && event_minutes[i] < event_minutes[i - 1]) {
      throw Error(Errc::kUnsortedEvents, "event " + std::to_string(i) + " at " +
                                             fmt(event_minutes[i]) + " precedes " +
                                             fmt(event_minutes[i - 1]));
    }
  }
  if (policy.uses_adaptive_window() && !hook.next_gap) {
    throw Error(Errc::kMissingForecaster,
                "policy " + policy.label() + " needs a next-gap forecaster");
  }
  if (policy.uses_prewarm() && !hook.prewarm_plan) {
    throw Error(Errc::kMissingForecaster,
                "policy " + policy.label() + " needs a prewarm plan");
  }

  SimulationResult r = Engine(event_minutes, policy, latency, hook).run();
  r.function_id = function_id;
  r.policy = policy.label();
  r.empty_trace = r.invocations == 0;
  r.short_trace = r.invocations < kNormalizedInvocations;
  if (r.invocations > 0) {
    r.cold_starts_per_100 =
        100.0 * static_cast<double>(r.cold_starts) / static_cast<double>(r.invocations);
  }
  return r;
}

std::span<const double> first_invocations(std::span<const double> event_minutes, std::size_t n) {
  return event_minutes.first(std::min(n, event_minutes.size()));
}

std::vector<SimulationResult> compare(std::span<const double> event_minutes,
                                      const std::vector<PolicyRun>& runs,
                                      const LatencyModel& latency,
                                      const std::string& function_id) {
  if (runs.size() < 2) {
    throw Error(Errc::kBadConfig, "compare needs at least two policies");
  }
  std::vector<SimulationResult> out;
  out.reserve(runs.size());
  for (const PolicyRun& run : runs) {
    out.push_back(simulate(event_minutes, run.policy, latency, run.hook, function_id));
  }
  return out;
}

double cold_start_reduction(const SimulationResult& baseline, const SimulationResult& candidate) {
  if (baseline.cold_starts == 0) {
    throw Error(Errc::kZeroBaseline, "baseline " + baseline.policy + " has no cold starts");
  }
  const auto b = static_cast<double>(baseline.cold_starts);
  return 100.0 * (b - static_cast<double>(candidate.cold_starts)) / b;
}

std::string format_reduction(double percent) {
  return std::to_string(static_cast<long long>(std::llround(percent))) + "%";
}

nlohmann::json result_to_json(const SimulationResult& r) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : r.window_log) {
    log.push_back({{"time", e.time_minutes}, {"window", e.window_minutes}});
  }
  nlohmann::json j = {{"functionId", r.function_id},
                      {"policy", r.policy},
                      {"invocations", r.invocations},
                      {"coldStarts", r.cold_starts},
                      {"coldStartsPer100", nullptr},
                      {"meanLatencyMs", r.mean_latency_ms()},
                      {"p99LatencyMs", r.p99_latency_ms()},
                      {"containerMinutes", r.container_minutes},
                      {"windowLog", std::move(log)}};
  if (r.cold_starts_per_100) {
    j["coldStartsPer100"] = *r.cold_starts_per_100;
  }
  if (r.empty_trace) {
    j["emptyTrace"] = true;
  }
  if (r.short_trace) {
    j["shortTrace"] = true;
  }
  return j;
}

SummaryRow summarize(const SimulationResult& r, const std::string& platform) {
  SummaryRow row{r.function_id, platform, 0.0, 0.0, r.cold_starts_per_100};
  if (!r.window_log.empty()) {
    const auto [lo, hi] = std::minmax_element(
        r.window_log.begin(), r.window_log.end(),
        [](const WindowLogEntry& a, const WindowLogEntry& b) {
          return a.window_minutes < b.window_minutes;
        });
    row.icw_min = lo->window_minutes;
    row.icw_max = hi->window_minutes;
  }
  return row;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "function,platform,icw_min,icw_max,cs_per_100\n";
  for (const SummaryRow& r : rows) {
    out << r.function << ',' << r.platform << ',' << fmt(r.icw_min) << ',' << fmt(r.icw_max)
        << ',' << (r.cs_per_100 ? fmt(*r.cs_per_100) : "") << '\n';
  }
}

void write_plot_csv(std::ostream& out, const std::vector<SimulationResult>& results) {
  out << "function,policy,invocation,time_minutes,window_minutes,cold,cumulative_cold_starts\n";
  for (const SimulationResult& r : results) {
    std::size_t cumulative = 0;
    for (std::size_t i = 0; i < r.window_log.size(); ++i) {
      cumulative += r.cold[i] ? 1 : 0;
      out << r.function_id << ',' << r.policy << ',' << i << ','
          << fmt(r.window_log[i].time_minutes) << ',' << fmt(r.window_log[i].window_minutes)
          << ',' << (r.cold[i] ? 1 : 0) << ',' << cumulative << '\n';
    }
  }
}

} // namespace coldstart::simulator
