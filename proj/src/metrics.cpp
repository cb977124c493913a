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

#include "coldstart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "coldstart/error.hpp"

namespace coldstart::metrics {

namespace {

void check_pair(std::span<const double> a, std::span<const double> f,
                std::size_t min_len = 1) {
  if (a.size() != f.size()) {
    throw Error(Errc::kLengthMismatch, std::to_string(a.size()) + " actual vs " +
                                           std::to_string(f.size()) + " forecast values");
  }
  if (a.size() < min_len) {
    throw Error(Errc::kEmpty, "need at least " + std::to_string(min_len) + " values");
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x) {
  const double m = mean_of(x);
  double acc = 0.0;
  for (double v : x) {
    acc += (v - m) * (v - m);
  }
  return acc / static_cast<double>(x.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

template <typename F>
MetricValue guarded(F&& f) {
  try {
    return {f(), {}};
  } catch (const Error& e) {
    return {std::nullopt, std::string(errc_name(e.code()))};
  }
}

std::string format_value(const MetricValue& v) {
  if (!v.ok()) {
    return {};
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v.value);
  return buf;
}

nlohmann::json value_json(const MetricValue& v) {
  return v.ok() ? nlohmann::json(*v.value) : nlohmann::json(nullptr);
}

} // namespace

double smape(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast);
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double den = std::abs(actual[i]) + std::abs(forecast[i]);
    if (den > 0.0) {
      acc += 2.0 * std::abs(forecast[i] - actual[i]) / den;
    }
  }
  return acc / static_cast<double>(actual.size());
}

double rmse(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast);
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = forecast[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(actual.size()));
}

double normalized_rmse(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast);
  const auto [lo, hi] = std::minmax_element(actual.begin(), actual.end());
  if (!(*hi > *lo)) {
    throw Error(Errc::kZeroRange, "actual values are constant");
  }
  return rmse(actual, forecast) / (*hi - *lo);
}

double r2_score(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast, 2);
  const double m = mean_of(actual);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
    ss_tot += (actual[i] - m) * (actual[i] - m);
  }
  if (!(ss_tot > 0.0)) {
    throw Error(Errc::kZeroVariance, "actual values are constant");
  }
  return 1.0 - ss_res / ss_tot;
}

double explained_variance(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast, 2);
  const double var_a = population_variance(actual);
  if (!(var_a > 0.0)) {
    throw Error(Errc::kZeroVariance, "actual values are constant");
  }
  std::vector<double> residual(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    residual[i] = actual[i] - forecast[i];
  }
  return 1.0 - population_variance(residual) / var_a;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && x[order[hi]] == x[order[lo]]) {
      ++hi;
    }
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) {
      ranks[order[k]] = rank;
    }
    lo = hi;
  }
  return ranks;
}

double spearman(std::span<const double> actual, std::span<const double> forecast) {
  check_pair(actual, forecast, 2);
  auto distinct = [](std::span<const double> v) {
    return std::any_of(v.begin(), v.end(), [&](double x) { return x != v[0]; });
  };
  if (!distinct(actual) || !distinct(forecast)) {
    throw Error(Errc::kDegenerateRanks, "a side has all-equal values");
  }
  const auto ra = average_ranks(actual);
  const auto rf = average_ranks(forecast);
  return pearson(ra, rf);
}

MetricReport evaluate(std::span<const double> actual, std::span<const double> forecast,
                      std::string model, std::string dataset) {
  check_pair(actual, forecast);
  MetricReport r;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.n = actual.size();
  r.smape = guarded([&] { return smape(actual, forecast); });
  r.explained_variance = guarded([&] { return explained_variance(actual, forecast); });
  r.rmse = guarded([&] { return rmse(actual, forecast); });
  r.normalized_rmse = guarded([&] { return normalized_rmse(actual, forecast); });
  r.r2 = guarded([&] { return r2_score(actual, forecast); });
  r.spearman = guarded([&] { return spearman(actual, forecast); });
  return r;
}

void write_reports_csv(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "model,dataset,smape,explained_variance,rmse,normalized_rmse,r2,spearman,n\n";
  for (const auto& r : reports) {
    out << r.model << ',' << r.dataset << ',' << format_value(r.smape) << ','
        << format_value(r.explained_variance) << ',' << format_value(r.rmse) << ','
        << format_value(r.normalized_rmse) << ',' << format_value(r.r2) << ','
        << format_value(r.spearman) << ',' << r.n << '\n';
  }
}

nlohmann::json reports_to_json(const std::vector<MetricReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row{{"model", r.model},
                       {"dataset", r.dataset},
                       {"smape", value_json(r.smape)},
                       {"explained_variance", value_json(r.explained_variance)},
                       {"rmse", value_json(r.rmse)},
                       {"normalized_rmse", value_json(r.normalized_rmse)},
                       {"r2", value_json(r.r2)},
                       {"spearman", value_json(r.spearman)},
                       {"n", r.n}};
    nlohmann::json reasons = nlohmann::json::object();
    for (const auto& [name, v] :
         {std::pair{"smape", &r.smape}, {"explained_variance", &r.explained_variance},
          {"rmse", &r.rmse}, {"normalized_rmse", &r.normalized_rmse}, {"r2", &r.r2},
          {"spearman", &r.spearman}}) {
      if (!v->ok()) {
        reasons[name] = v->reason;
      }
    }
    if (!reasons.empty()) {
      row["nullReasons"] = reasons;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace coldstart::metrics
