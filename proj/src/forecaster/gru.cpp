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

#include <random>

#include "coldstart/error.hpp"
#include "coldstart/forecaster.hpp"
#include "init.hpp"

namespace coldstart::forecaster {

using namespace ad;

namespace {

Tensor with_embedding(const ParameterSet& p, const ModelConfig& cfg, const Tensor& features,
                      std::int64_t category) {
  if (cfg.embedding_dimension == 0) {
    return features;
  }
  const std::int64_t idx[] = {category};
  return concat({features, repeat_rows(embedding_lookup(p.get("embedding"), idx),
                                       features.rows())},
                1);
}

struct Gates {
  Tensor z, r, n; // input projections including biases
};

Gates project_inputs(const ParameterSet& p, const Tensor& x) {
  return {add_row(matmul(x, p.get("gru.wz")), p.get("gru.bz")),
          add_row(matmul(x, p.get("gru.wr")), p.get("gru.br")),
          add_row(matmul(x, p.get("gru.wn")), p.get("gru.bn"))};
}

// h' = (1 - z) * n + z * h with z, r sigmoid gates and
// n = tanh(Wn x + bn + r * (Un h + bhn)).
Tensor recur(const ParameterSet& p, const Tensor& xz, const Tensor& xr, const Tensor& xn,
             const Tensor& h) {
  const Tensor z = sigmoid(add(xz, matmul(h, p.get("gru.uz"))));
  const Tensor r = sigmoid(add(xr, matmul(h, p.get("gru.ur"))));
  const Tensor n = tanh(add(xn, mul(r, add_row(matmul(h, p.get("gru.un")), p.get("gru.bhn")))));
  return add(n, mul(z, sub(h, n)));
}

StudentT head(const ParameterSet& p, const Tensor& x) {
  StudentT out;
  out.mu = add_row(matmul(x, p.get("head.mu.w")), p.get("head.mu.b"));
  out.sigma = add_scalar(
      softplus(add_row(matmul(x, p.get("head.sigma.w")), p.get("head.sigma.b"))), kSigmaFloor);
  out.nu = add_scalar(softplus(add_row(matmul(x, p.get("head.nu.w")), p.get("head.nu.b"))), 2.0);
  return out;
}

// Runs the recurrence over the rows of x starting from h; appends each
// new state to `states` when given.
Tensor unroll(const ParameterSet& p, const Tensor& x, Tensor h, std::vector<Tensor>* states) {
  const Gates g = project_inputs(p, x);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    h = recur(p, slice(g.z, 0, t, t + 1), slice(g.r, 0, t, t + 1), slice(g.n, 0, t, t + 1), h);
    if (states != nullptr) {
      states->push_back(h);
    }
  }
  return h;
}

} // namespace

GruForecaster::GruForecaster(ModelConfig config, std::uint64_t seed)
    : Forecaster(std::move(config)) {
  config_.validate();
  const std::size_t in = config_.input_dim();
  const std::size_t hid = config_.hidden_size;
  Initializer init(seed);
  if (config_.embedding_dimension > 0) {
    params_.add("embedding", init.normal(config_.cardinality, config_.embedding_dimension));
  }
  for (const char* g : {"z", "r", "n"}) {
    params_.add(std::string("gru.w") + g, init.xavier(in, hid));
    params_.add(std::string("gru.u") + g, init.xavier(hid, hid));
    params_.add(std::string("gru.b") + g, init.zeros(hid));
  }
  params_.add("gru.bhn", init.zeros(hid));
  for (const char* h : {"mu", "sigma", "nu"}) {
    params_.add(std::string("head.") + h + ".w", init.xavier(hid, 1));
    params_.add(std::string("head.") + h + ".b", init.zeros(1));
  }
}

Tensor GruForecaster::step(const Tensor& x, const Tensor& h) const {
  const Gates g = project_inputs(params_, x);
  return recur(params_, g.z, g.r, g.n, h);
}

StudentT GruForecaster::forward(const ForecastInput& input, std::mt19937_64* rng) const {
  if (!input.has_targets()) {
    throw Error(Errc::kShapeMismatch, "teacher forcing needs horizon targets");
  }
  const std::int64_t category = input.static_categorical.at(0);
  const Tensor past =
      with_embedding(params_, config_, context_features(input, config_), category);
  const Tensor future = with_embedding(
      params_, config_,
      horizon_features(input, config_, input.future_values, config_.prediction_length),
      category);
  Tensor h = unroll(params_, past, Tensor::zeros({1, config_.hidden_size}), nullptr);
  std::vector<Tensor> states;
  unroll(params_, future, h, &states);
  Tensor hidden = concat(states, 0);
  if (rng != nullptr && config_.dropout > 0.0) {
    hidden = dropout(hidden, config_.dropout, *rng);
  }
  return head(params_, hidden);
}

ForecastDistribution GruForecaster::forecast(const ForecastInput& input,
                                             std::size_t num_samples, std::uint64_t seed,
                                             std::size_t steps) const {
  if (steps == 0 || steps > config_.prediction_length) {
    steps = config_.prediction_length;
  }
  NoGradScope no_grad;
  const std::int64_t category = input.static_categorical.at(0);
  const Tensor past =
      with_embedding(params_, config_, context_features(input, config_), category);
  Tensor h = repeat_rows(unroll(params_, past, Tensor::zeros({1, config_.hidden_size}), nullptr),
                         num_samples);

  std::mt19937_64 rng(seed);
  const std::size_t history = config_.required_history();
  const std::size_t width = config_.lags_sequence.size() + kNumTimeFeatures;
  std::vector<double> fed(num_samples * steps, 0.0);
  std::vector<double> raw(num_samples * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> rows(num_samples * width);
    for (std::size_t s = 0; s < num_samples; ++s) {
      double* row = &rows[s * width];
      for (std::size_t i = 0; i < config_.lags_sequence.size(); ++i) {
        const std::size_t lag = config_.lags_sequence[i];
        row[i] = lag <= t ? fed[s * steps + t - lag] : input.past_values[history + t - lag];
      }
      std::copy_n(&input.future_time_features[t * kNumTimeFeatures], kNumTimeFeatures,
                  row + config_.lags_sequence.size());
    }
    const Tensor x = with_embedding(params_, config_,
                                    Tensor({num_samples, width}, std::move(rows)), category);
    h = step(x, h);
    const StudentT d = head(params_, h);
    for (std::size_t s = 0; s < num_samples; ++s) {
      const double z = d.mu[s] + d.sigma[s] * std::student_t_distribution<double>(d.nu[s])(rng);
      fed[s * steps + t] = z;
      raw[s * steps + t] = z * input.scale.std + input.scale.mean;
    }
  }
  return make_distribution(num_samples, steps, std::move(raw));
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, ModelConfig config,
                                            std::uint64_t seed) {
  if (kind == "transformer") {
    return std::make_unique<TransformerForecaster>(std::move(config), seed);
  }
  if (kind == "gru") {
    return std::make_unique<GruForecaster>(std::move(config), seed);
  }
  throw Error(Errc::kBadConfig, "unknown model kind '" + kind + "'");
}

} // namespace coldstart::forecaster
