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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "coldstart/error.hpp"
#include "coldstart/forecaster.hpp"

namespace coldstart::forecaster {

using ad::Tensor;

std::vector<std::size_t> default_lags(trace::Granularity g) {
  if (g == trace::Granularity::kMinute) {
    return {1, 2, 3, 4, 5, 10, 30, 60, 1440};
  }
  return {1, 2, 3, 24, 48, 168};
}

std::vector<std::size_t> default_gap_lags() { return {1, 2, 3, 4, 5, 10}; }

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kBadConfig, what); };
  if (context_length == 0 || prediction_length == 0) {
    fail("contextLength and predictionLength must be positive");
  }
  if (d_model == 0 || num_heads == 0 || d_model % num_heads != 0) {
    fail("dModel " + std::to_string(d_model) + " is not divisible by numHeads " +
         std::to_string(num_heads));
  }
  if (lags_sequence.empty()) {
    fail("lagsSequence is empty");
  }
  for (std::size_t i = 0; i < lags_sequence.size(); ++i) {
    if (lags_sequence[i] == 0 || (i > 0 && lags_sequence[i] <= lags_sequence[i - 1])) {
      fail("lagsSequence must be strictly increasing positive integers");
    }
  }
  if (cardinality == 0) {
    fail("cardinality must be at least 1");
  }
  if (feedforward_dim == 0 || hidden_size == 0) {
    fail("feedforwardDim and hiddenSize must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    fail("dropout must lie in [0, 1)");
  }
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"contextLength", c.context_length},
          {"predictionLength", c.prediction_length},
          {"numLayersEncoder", c.num_layers_encoder},
          {"numLayersDecoder", c.num_layers_decoder},
          {"dModel", c.d_model},
          {"numHeads", c.num_heads},
          {"embeddingDimension", c.embedding_dimension},
          {"cardinality", c.cardinality},
          {"lagsSequence", c.lags_sequence},
          {"feedforwardDim", c.feedforward_dim},
          {"dropout", c.dropout},
          {"positionalEncoding", c.positional_encoding},
          {"hiddenSize", c.hidden_size}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.context_length = j.value("contextLength", c.context_length);
    c.prediction_length = j.value("predictionLength", c.prediction_length);
    c.num_layers_encoder = j.value("numLayersEncoder", c.num_layers_encoder);
    c.num_layers_decoder = j.value("numLayersDecoder", c.num_layers_decoder);
    c.d_model = j.value("dModel", c.d_model);
    c.num_heads = j.value("numHeads", c.num_heads);
    c.embedding_dimension = j.value("embeddingDimension", c.embedding_dimension);
    c.cardinality = j.value("cardinality", c.cardinality);
    c.lags_sequence = j.value("lagsSequence", c.lags_sequence);
    c.feedforward_dim = j.value("feedforwardDim", 4 * c.d_model);
    c.dropout = j.value("dropout", c.dropout);
    c.positional_encoding = j.value("positionalEncoding", c.positional_encoding);
    c.hidden_size = j.value("hiddenSize", c.hidden_size);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadConfig, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

double unit_interval(double value, double max_value) {
  return max_value > 0.0 ? value / max_value - 0.5 : 0.0;
}

double age_feature(std::size_t index, std::size_t age_horizon) {
  if (age_horizon == 0) {
    return -0.5;
  }
  const double a = std::log1p(static_cast<double>(index)) /
                   std::log1p(static_cast<double>(age_horizon));
  return std::min(a, 1.0) - 0.5;
}

double population_std(std::span<const double> x, double mean) {
  double acc = 0.0;
  for (double v : x) {
    acc += (v - mean) * (v - mean);
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

} // namespace

TimeFeatureRow time_features_at(trace::Timestamp start, trace::Granularity g,
                                std::size_t index, std::size_t age_horizon) {
  using namespace std::chrono;
  const trace::Timestamp t =
      start + seconds(trace::step_seconds(g) * static_cast<std::int64_t>(index));
  const auto day = floor<days>(t);
  const hh_mm_ss hms(t - day);
  const year_month_day ymd(day);
  const weekday wd(day);
  TimeFeatureRow row{};
  row[0] = g == trace::Granularity::kMinute
               ? unit_interval(static_cast<double>(hms.minutes().count()), 59.0)
               : 0.0;
  row[1] = unit_interval(static_cast<double>(hms.hours().count()), 23.0);
  row[2] = unit_interval(static_cast<double>(wd.iso_encoding() - 1), 6.0);
  row[3] = unit_interval(static_cast<double>(static_cast<unsigned>(ymd.day()) - 1), 30.0);
  row[4] = age_feature(index, age_horizon);
  return row;
}

std::vector<double> make_time_features(trace::Timestamp start, trace::Granularity g,
                                       std::size_t begin, std::size_t count,
                                       std::size_t age_horizon) {
  std::vector<double> out;
  out.reserve(count * kNumTimeFeatures);
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = time_features_at(start, g, begin + i, age_horizon);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::vector<double> ForecastInput::raw_targets() const {
  std::vector<double> out(future_values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = future_values[i] * scale.std + scale.mean;
  }
  return out;
}

ForecastInput build_input_from_values(std::span<const double> values, std::size_t t0,
                                      const ModelConfig& config,
                                      const TimeFeatureFn& features,
                                      std::int64_t category) {
  const std::size_t context = config.context_length;
  const std::size_t horizon = config.prediction_length;
  const std::size_t history = config.required_history();
  if (t0 < history) {
    throw Error(Errc::kInsufficientHistory, "forecast origin " + std::to_string(t0) +
                                                " needs " + std::to_string(history) +
                                                " prior steps");
  }
  if (t0 > values.size()) {
    throw Error(Errc::kSeriesTooShort, "forecast origin " + std::to_string(t0) +
                                           " lies beyond " +
                                           std::to_string(values.size()) + " values");
  }
  if (category < 0 || static_cast<std::size_t>(category) >= config.cardinality) {
    throw Error(Errc::kBadConfig, "static category " + std::to_string(category) +
                                      " outside cardinality " +
                                      std::to_string(config.cardinality));
  }
  ForecastInput in;
  in.t0 = t0;
  in.static_categorical = {category};
  const auto ctx = values.subspan(t0 - context, context);
  in.scale.mean = std::accumulate(ctx.begin(), ctx.end(), 0.0) / static_cast<double>(context);
  in.scale.std = std::max(population_std(ctx, in.scale.mean), kScaleFloor);

  auto standardize = [&](double v) { return (v - in.scale.mean) / in.scale.std; };
  const std::size_t first = t0 - history;
  in.past_values.reserve(history);
  in.past_time_features.reserve(history * kNumTimeFeatures);
  for (std::size_t j = first; j < t0; ++j) {
    in.past_values.push_back(standardize(values[j]));
    const auto row = features(j);
    in.past_time_features.insert(in.past_time_features.end(), row.begin(), row.end());
  }
  in.future_time_features.reserve(horizon * kNumTimeFeatures);
  for (std::size_t j = t0; j < t0 + horizon; ++j) {
    const auto row = features(j);
    in.future_time_features.insert(in.future_time_features.end(), row.begin(), row.end());
  }
  if (t0 + horizon <= values.size()) {
    for (std::size_t j = t0; j < t0 + horizon; ++j) {
      in.future_values.push_back(standardize(values[j]));
    }
  }
  return in;
}

ForecastInput build_input(const trace::InvocationSeries& s, std::size_t t0,
                          const ModelConfig& config, std::int64_t category) {
  std::vector<double> values(s.values.begin(), s.values.end());
  const std::size_t age_horizon = std::max(values.size(), t0 + config.prediction_length);
  return build_input_from_values(
      values, t0, config,
      [&](std::size_t j) { return time_features_at(s.start_time, s.granularity, j, age_horizon); },
      category);
}

ForecastInput build_gap_input(std::span<const double> gaps, std::size_t t0,
                              const ModelConfig& config, std::int64_t category) {
  const std::size_t age_horizon = std::max(gaps.size(), t0 + config.prediction_length);
  return build_input_from_values(
      gaps, t0, config,
      [&](std::size_t j) {
        TimeFeatureRow row{};
        row[4] = age_feature(j, age_horizon);
        return row;
      },
      category);
}

std::vector<std::size_t> training_origins(std::size_t end, const ModelConfig& config,
                                          std::size_t stride) {
  if (stride == 0) {
    throw Error(Errc::kBadConfig, "stride must be positive");
  }
  std::vector<std::size_t> out;
  const std::size_t first = config.required_history();
  if (end < first + config.prediction_length) {
    return out;
  }
  const std::size_t last = end - config.prediction_length;
  for (std::size_t k = (last - first) / stride + 1; k-- > 0;) {
    out.push_back(last - k * stride);
  }
  return out;
}

Tensor context_features(const ForecastInput& input, const ModelConfig& config) {
  const std::size_t context = config.context_length;
  const std::size_t max_lag = config.max_lag();
  const std::size_t width = config.lags_sequence.size() + kNumTimeFeatures;
  if (input.past_values.size() != context + max_lag ||
      input.past_time_features.size() != input.past_values.size() * kNumTimeFeatures) {
    throw Error(Errc::kShapeMismatch, "input history does not match the model config");
  }
  std::vector<double> out;
  out.reserve(context * width);
  for (std::size_t i = 0; i < context; ++i) {
    for (std::size_t lag : config.lags_sequence) {
      out.push_back(input.past_values[i + max_lag - lag]);
    }
    const double* tf = &input.past_time_features[(i + max_lag) * kNumTimeFeatures];
    out.insert(out.end(), tf, tf + kNumTimeFeatures);
  }
  return Tensor({context, width}, std::move(out));
}

Tensor horizon_features(const ForecastInput& input, const ModelConfig& config,
                        std::span<const double> future, std::size_t rows) {
  const std::size_t history = config.required_history();
  const std::size_t width = config.lags_sequence.size() + kNumTimeFeatures;
  if (input.past_values.size() != history || rows > config.prediction_length ||
      input.future_time_features.size() != config.prediction_length * kNumTimeFeatures) {
    throw Error(Errc::kShapeMismatch, "input horizon does not match the model config");
  }
  std::vector<double> out;
  out.reserve(rows * width);
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t lag : config.lags_sequence) {
      if (lag <= h) {
        if (h - lag >= future.size()) {
          throw Error(Errc::kShapeMismatch, "decoder feedback shorter than the horizon");
        }
        out.push_back(future[h - lag]);
      } else {
        out.push_back(input.past_values[history + h - lag]);
      }
    }
    const double* tf = &input.future_time_features[h * kNumTimeFeatures];
    out.insert(out.end(), tf, tf + kNumTimeFeatures);
  }
  return Tensor({rows, width}, std::move(out));
}

Tensor positional_encoding(std::size_t offset, std::size_t count, std::size_t d) {
  std::vector<double> out(count * d);
  for (std::size_t p = 0; p < count; ++p) {
    const double pos = static_cast<double>(offset + p);
    for (std::size_t k = 0; k < d; ++k) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / static_cast<double>(d));
      out[p * d + k] = k % 2 == 0 ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return Tensor({count, d}, std::move(out));
}

Tensor nll_loss(const StudentT& dist, const Tensor& targets) {
  using namespace ad;
  const Tensor z = div(sub(targets, dist.mu), dist.sigma);
  const Tensor half_nu_plus = scale(add_scalar(dist.nu, 1.0), 0.5);
  const Tensor log_norm = add(sub(lgamma(scale(dist.nu, 0.5)), lgamma(half_nu_plus)),
                              scale(log(scale(dist.nu, std::numbers::pi)), 0.5));
  const Tensor kernel = mul(half_nu_plus, log(add_scalar(div(mul(z, z), dist.nu), 1.0)));
  return mean(add(add(log_norm, log(dist.sigma)), kernel));
}

double student_t_log_density(double y, double mu, double sigma, double nu) {
  const double z = (y - mu) / sigma;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - std::log(sigma) -
         0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double ForecastDistribution::quantile(double q, std::size_t t) const {
  std::vector<double> column(num_samples);
  for (std::size_t s = 0; s < num_samples; ++s) {
    column[s] = sample(s, t);
  }
  std::sort(column.begin(), column.end());
  const double h = std::clamp(q, 0.0, 1.0) * static_cast<double>(num_samples - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, num_samples - 1);
  return column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
}

std::vector<double> ForecastDistribution::quantiles(double q) const {
  std::vector<double> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    out[t] = quantile(q, t);
  }
  return out;
}

std::vector<std::int64_t> ForecastDistribution::count_samples() const {
  std::vector<std::int64_t> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [](double v) { return static_cast<std::int64_t>(std::llround(v)); });
  return out;
}

ForecastDistribution make_distribution(std::size_t num_samples, std::size_t steps,
                                       std::vector<double> raw_samples) {
  if (num_samples == 0 || raw_samples.size() != num_samples * steps) {
    throw Error(Errc::kShapeMismatch, "expected " + std::to_string(num_samples) + " x " +
                                          std::to_string(steps) + " samples");
  }
  ForecastDistribution d;
  d.num_samples = num_samples;
  d.steps = steps;
  d.samples.resize(raw_samples.size());
  std::transform(raw_samples.begin(), raw_samples.end(), d.samples.begin(),
                 [](double v) { return std::max(v, 0.0); });
  d.raw_samples = std::move(raw_samples);
  d.point_forecast = d.quantiles(0.5);
  return d;
}

std::vector<double> seasonal_naive(std::span<const double> history, std::size_t period,
                                   std::size_t horizon) {
  if (period == 0 || history.size() < period) {
    throw Error(Errc::kSeriesTooShort, std::to_string(history.size()) +
                                           " values cannot seed period " +
                                           std::to_string(period));
  }
  std::vector<double> out(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    out[t] = t < period ? history[history.size() - period + t] : out[t - period];
  }
  return out;
}

Tensor multi_head_attention(const Tensor& query_input, const Tensor& kv_input,
                            const AttentionParams& p, std::size_t num_heads, bool causal,
                            std::vector<Tensor>* weights_out) {
  using namespace ad;
  const std::size_t d = p.wq.cols();
  if (num_heads == 0 || d % num_heads != 0) {
    throw Error(Errc::kShapeMismatch, "width " + std::to_string(d) +
                                          " is not divisible by " +
                                          std::to_string(num_heads) + " heads");
  }
  const Tensor q = add_row(matmul(query_input, p.wq), p.bq);
  const Tensor k = add_row(matmul(kv_input, p.wk), p.bk);
  const Tensor v = add_row(matmul(kv_input, p.wv), p.bv);
  const std::size_t dk = d / num_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Tensor> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const Tensor qh = num_heads == 1 ? q : slice(q, 1, h * dk, (h + 1) * dk);
    const Tensor kh = num_heads == 1 ? k : slice(k, 1, h * dk, (h + 1) * dk);
    const Tensor vh = num_heads == 1 ? v : slice(v, 1, h * dk, (h + 1) * dk);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (causal) {
      scores = causal_mask(scores);
    }
    const Tensor weights = softmax(scores, 1);
    if (weights_out != nullptr) {
      weights_out->push_back(weights);
    }
    heads.push_back(matmul(weights, vh));
  }
  const Tensor joined = num_heads == 1 ? heads[0] : concat(heads, 1);
  return add_row(matmul(joined, p.wo), p.bo);
}

Tensor& ParameterSet::add(const std::string& name, Tensor t) {
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParameterSet::get(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) {
      return t;
    }
  }
  throw Error(Errc::kBadCheckpoint, "no parameter named " + name);
}

const Tensor& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  for (const auto& e : entries_) {
    out.push_back(e.second);
  }
  return out;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    n += e.second.size();
  }
  return n;
}

} // namespace coldstart::forecaster
