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

#include "coldstart/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "coldstart/error.hpp"

namespace coldstart::policy {

namespace {

constexpr std::pair<PolicyKind, std::string_view> kKindNames[] = {
    {PolicyKind::kFixedWindow, "fixedWindow"},
    {PolicyKind::kAdaptiveWindow, "adaptiveWindow"},
    {PolicyKind::kPrewarm, "prewarm"},
    {PolicyKind::kPrewarmPlusAdaptive, "prewarmPlusAdaptive"},
    {PolicyKind::kPerfectForesight, "perfectForesight"},
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

nlohmann::json bound_json(double v) { return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

double bound_from_json(const nlohmann::json& v) {
  return v.is_null() ? kUnbounded : v.get<double>();
}

} // namespace

std::string_view policy_kind_name(PolicyKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) {
      return name;
    }
  }
  return "fixedWindow";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) {
      return kind;
    }
  }
  throw Error(Errc::kInvalidPolicy, "unknown policy kind '" + std::string(name) + "'");
}

bool PolicySpec::uses_adaptive_window() const {
  return kind == PolicyKind::kAdaptiveWindow || kind == PolicyKind::kPrewarmPlusAdaptive;
}

bool PolicySpec::uses_prewarm() const {
  return kind == PolicyKind::kPrewarm || kind == PolicyKind::kPrewarmPlusAdaptive;
}

std::string PolicySpec::label() const {
  switch (kind) {
    case PolicyKind::kFixedWindow: return "fixed(" + number(fixed_minutes) + ")";
    case PolicyKind::kAdaptiveWindow:
      return "adaptive(q=" + number(quantile) + ",g=" + number(safety_factor) + ")";
    case PolicyKind::kPrewarm: return "prewarm(q=" + number(quantile) + ")";
    case PolicyKind::kPrewarmPlusAdaptive:
      return "prewarm+adaptive(q=" + number(quantile) + ",g=" + number(safety_factor) + ")";
    case PolicyKind::kPerfectForesight: return "oracle";
  }
  return "unknown";
}

void PolicySpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kInvalidPolicy, what); };
  if (!(fixed_minutes > 0.0) || std::isinf(fixed_minutes)) {
    fail("window minutes must be positive and finite, got " + number(fixed_minutes));
  }
  if (!(quantile > 0.0 && quantile < 1.0)) {
    fail("quantile must lie in (0, 1), got " + number(quantile));
  }
  if (!(safety_factor >= 1.0)) {
    fail("safety factor must be >= 1, got " + number(safety_factor));
  }
  if (!(min_window >= 1.0) || !(max_window >= min_window)) {
    fail("window clamp [" + number(min_window) + ", " + number(max_window) +
         "] must satisfy 1 <= min <= max");
  }
  if (max_pool < 0) {
    fail("maxPool must be non-negative");
  }
  if (!(oracle_epsilon >= 0.0)) {
    fail("oracle epsilon must be non-negative");
  }
}

nlohmann::json policy_to_json(const PolicySpec& p) {
  return {{"kind", policy_kind_name(p.kind)},
          {"minutes", p.fixed_minutes},
          {"quantile", p.quantile},
          {"safetyFactor", p.safety_factor},
          {"clamp", {bound_json(p.min_window), bound_json(p.max_window)}},
          {"maxPool", p.max_pool},
          {"oracleEpsilon", p.oracle_epsilon},
          {"oraclePrewarm", p.oracle_prewarm}};
}

PolicySpec policy_from_json(const nlohmann::json& j) {
  PolicySpec p;
  try {
    p.kind = parse_policy_kind(j.at("kind").get<std::string>());
    if (p.kind == PolicyKind::kPerfectForesight) {
      p.max_window = kUnbounded;
    }
    p.fixed_minutes = j.value("minutes", p.fixed_minutes);
    p.quantile = j.value("quantile", p.quantile);
    p.safety_factor = j.value("safetyFactor", p.safety_factor);
    if (j.contains("clamp")) {
      const auto& c = j.at("clamp");
      if (!c.is_array() || c.size() != 2) {
        throw Error(Errc::kInvalidPolicy, "clamp must be [min, max]");
      }
      p.min_window = bound_from_json(c[0]);
      p.max_window = bound_from_json(c[1]);
    }
    p.max_pool = j.value("maxPool", p.max_pool);
    p.oracle_epsilon = j.value("oracleEpsilon", p.oracle_epsilon);
    p.oracle_prewarm = j.value("oraclePrewarm", p.oracle_prewarm);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidPolicy, e.what());
  }
  p.validate();
  return p;
}

PolicySpec fixed_window(double minutes) {
  PolicySpec p;
  p.fixed_minutes = minutes;
  p.validate();
  return p;
}

PolicySpec adaptive_window_policy(double quantile, double safety_factor, double min_window,
                                  double max_window) {
  PolicySpec p;
  p.kind = PolicyKind::kAdaptiveWindow;
  p.quantile = quantile;
  p.safety_factor = safety_factor;
  p.min_window = min_window;
  p.max_window = max_window;
  p.validate();
  return p;
}

PolicySpec prewarm_policy(double quantile, int max_pool) {
  PolicySpec p;
  p.kind = PolicyKind::kPrewarm;
  p.quantile = quantile;
  p.max_pool = max_pool;
  p.validate();
  return p;
}

PolicySpec perfect_foresight_policy(double min_window, double max_window) {
  PolicySpec p;
  p.kind = PolicyKind::kPerfectForesight;
  p.min_window = min_window;
  p.max_window = max_window;
  p.validate();
  return p;
}

double clamp_window(double minutes, const PolicySpec& spec) {
  return std::clamp(minutes, spec.min_window, spec.max_window);
}

IdleWindowDecision adaptive_window(const forecaster::ForecastDistribution& gap_forecast,
                                   const PolicySpec& spec, std::size_t at_event) {
  const double q = gap_forecast.quantile(spec.quantile, 0);
  return {at_event, clamp_window(spec.safety_factor * q, spec)};
}

std::vector<PrewarmPlan> prewarm_schedule(const forecaster::ForecastDistribution& count_forecast,
                                          const PolicySpec& spec, std::int64_t first_step,
                                          double step_minutes) {
  std::vector<PrewarmPlan> out;
  out.reserve(count_forecast.steps);
  for (std::size_t t = 0; t < count_forecast.steps; ++t) {
    const double q = std::max(0.0, count_forecast.quantile(spec.quantile, t));
    const double pool = std::min(static_cast<double>(spec.max_pool), std::ceil(q));
    out.push_back({first_step + static_cast<std::int64_t>(t), 1, static_cast<int>(pool),
                   step_minutes});
  }
  return out;
}

std::vector<IdleWindowDecision> perfect_foresight(std::span<const double> event_minutes,
                                                  const PolicySpec& spec) {
  std::vector<IdleWindowDecision> out;
  out.reserve(event_minutes.size());
  for (std::size_t i = 0; i < event_minutes.size(); ++i) {
    const double window =
        i + 1 < event_minutes.size()
            ? clamp_window(event_minutes[i + 1] - event_minutes[i] + spec.oracle_epsilon, spec)
            : spec.min_window;
    out.push_back({i, window});
  }
  return out;
}

std::vector<PrewarmPlan> perfect_prewarm(std::span<const double> event_minutes,
                                         double step_minutes, int max_pool) {
  std::map<std::int64_t, int> counts;
  for (double t : event_minutes) {
    ++counts[static_cast<std::int64_t>(std::floor(t / step_minutes))];
  }
  std::vector<PrewarmPlan> out;
  for (const auto& [step, n] : counts) {
    out.push_back({step, 1, std::min(n, max_pool), step_minutes});
  }
  return out;
}

void write_window_log_csv(std::ostream& out, const std::vector<IdleWindowDecision>& d) {
  out << "eventIndex,windowMinutes\n";
  char buf[40];
  for (const auto& x : d) {
    std::snprintf(buf, sizeof buf, "%.17g", x.window_minutes);
    out << x.at_event << ',' << buf << '\n';
  }
}

void write_prewarm_log_csv(std::ostream& out, const std::vector<PrewarmPlan>& plans) {
  out << "step,poolSize\n";
  for (const auto& p : plans) {
    out << p.interval_start << ',' << p.pool_size << '\n';
  }
}

} // namespace coldstart::policy
