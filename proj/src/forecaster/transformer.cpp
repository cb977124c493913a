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

#include <cmath>
#include <random>

#include "coldstart/error.hpp"
#include "coldstart/forecaster.hpp"
#include "coldstart/kernels.hpp"
#include "init.hpp"

namespace coldstart::forecaster {

using namespace ad;

namespace {

std::string layer_name(const char* stack, std::size_t l, const char* part) {
  return std::string(stack) + std::to_string(l) + "." + part;
}

void add_attention(ParameterSet& p, Initializer& init, const std::string& prefix,
                   std::size_t d) {
  for (const char* m : {"q", "k", "v", "o"}) {
    p.add(prefix + ".w" + m, init.xavier(d, d));
    p.add(prefix + ".b" + m, init.zeros(d));
  }
}

void add_norm(ParameterSet& p, Initializer& init, const std::string& prefix, std::size_t d) {
  p.add(prefix + ".g", init.ones(d));
  p.add(prefix + ".b", init.zeros(d));
}

void add_feedforward(ParameterSet& p, Initializer& init, const std::string& prefix,
                     std::size_t d, std::size_t ff) {
  p.add(prefix + ".w1", init.xavier(d, ff));
  p.add(prefix + ".b1", init.zeros(ff));
  p.add(prefix + ".w2", init.xavier(ff, d));
  p.add(prefix + ".b2", init.zeros(d));
}

Tensor maybe_dropout(const Tensor& x, double p, std::mt19937_64* rng) {
  return rng != nullptr && p > 0.0 ? dropout(x, p, *rng) : x;
}

Tensor norm(const ParameterSet& p, const std::string& prefix, const Tensor& x) {
  return layer_norm(x, p.get(prefix + ".g"), p.get(prefix + ".b"));
}

Tensor feedforward(const ParameterSet& p, const std::string& prefix, const Tensor& x) {
  const Tensor hidden = gelu(add_row(matmul(x, p.get(prefix + ".w1")), p.get(prefix + ".b1")));
  return add_row(matmul(hidden, p.get(prefix + ".w2")), p.get(prefix + ".b2"));
}

// Attention of each row of q [S x d] over keys/values: row s reads rows
// [s * stride, s * stride + count) of k/v ([.. x d]).
Tensor cached_attention(const Tensor& q, std::span<const double> k, std::span<const double> v,
                        std::size_t stride, std::size_t count, std::size_t num_heads) {
  const std::size_t rows = q.rows(), d = q.cols(), dk = d / num_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> out(rows * d, 0.0);
  std::vector<double> w(count);
  for (std::size_t s = 0; s < rows; ++s) {
    const std::size_t base = s * stride;
    for (std::size_t h = 0; h < num_heads; ++h) {
      const auto qh = q.data().subspan(s * d + h * dk, dk);
      double mx = -INFINITY;
      for (std::size_t t = 0; t < count; ++t) {
        w[t] = kernels::dot(qh, k.subspan((base + t) * d + h * dk, dk)) * inv_sqrt;
        mx = std::max(mx, w[t]);
      }
      double total = 0.0;
      for (std::size_t t = 0; t < count; ++t) {
        w[t] = std::exp(w[t] - mx);
        total += w[t];
      }
      const std::span<double> dst(&out[s * d + h * dk], dk);
      for (std::size_t t = 0; t < count; ++t) {
        kernels::axpy(w[t] / total, v.subspan((base + t) * d + h * dk, dk), dst);
      }
    }
  }
  return Tensor({rows, d}, std::move(out));
}

struct StepParams {
  std::vector<double> mu, sigma, nu;
};

using Feedback = std::function<double(std::size_t sample, std::size_t step, double mu,
                                      double sigma, double nu)>;

// Cached autoregressive decoding of `samples` trajectories for `steps`
// horizon steps. `choose` returns the standardized value fed back for a
// (sample, step) given the emitted parameters. Returns parameters in
// [step][sample] order.
std::vector<StepParams> run_decoder(const TransformerForecaster& model,
                                    const ForecastInput& input, std::size_t samples,
                                    std::size_t steps, const Feedback& choose) {
  const ModelConfig& cfg = model.config();
  const ParameterSet& p = model.params();
  const std::size_t d = cfg.d_model;
  const std::int64_t category = input.static_categorical.at(0);
  NoGradScope no_grad;

  const Tensor memory = model.encode(input);
  struct LayerCache {
    Tensor cross_k, cross_v;
    std::vector<double> self_k, self_v; // [samples x steps x d]
  };
  std::vector<LayerCache> caches(cfg.num_layers_decoder);
  for (std::size_t l = 0; l < cfg.num_layers_decoder; ++l) {
    const auto cross = model.attention_params(layer_name("dec", l, "cross"));
    caches[l].cross_k = add_row(matmul(memory, cross.wk), cross.bk);
    caches[l].cross_v = add_row(matmul(memory, cross.wv), cross.bv);
    caches[l].self_k.assign(samples * steps * d, 0.0);
    caches[l].self_v.assign(samples * steps * d, 0.0);
  }

  const std::size_t history = cfg.required_history();
  const std::size_t width = cfg.lags_sequence.size() + kNumTimeFeatures;
  std::vector<double> fed(samples * steps, 0.0);
  std::vector<StepParams> out(steps);
  for (std::size_t h = 0; h < steps; ++h) {
    std::vector<double> rows(samples * width);
    for (std::size_t s = 0; s < samples; ++s) {
      double* row = &rows[s * width];
      for (std::size_t i = 0; i < cfg.lags_sequence.size(); ++i) {
        const std::size_t lag = cfg.lags_sequence[i];
        row[i] = lag <= h ? fed[s * steps + h - lag] : input.past_values[history + h - lag];
      }
      std::copy_n(&input.future_time_features[h * kNumTimeFeatures], kNumTimeFeatures,
                  row + cfg.lags_sequence.size());
    }
    Tensor x = model.project(Tensor({samples, width}, std::move(rows)), category);
    if (cfg.positional_encoding) {
      x = add(x, repeat_rows(positional_encoding(cfg.context_length + h, 1, d), samples));
    }
    for (std::size_t l = 0; l < cfg.num_layers_decoder; ++l) {
      LayerCache& c = caches[l];
      const auto self = model.attention_params(layer_name("dec", l, "self"));
      const Tensor q = add_row(matmul(x, self.wq), self.bq);
      const Tensor k = add_row(matmul(x, self.wk), self.bk);
      const Tensor v = add_row(matmul(x, self.wv), self.bv);
      for (std::size_t s = 0; s < samples; ++s) {
        std::copy_n(&k.data()[s * d], d, &c.self_k[(s * steps + h) * d]);
        std::copy_n(&v.data()[s * d], d, &c.self_v[(s * steps + h) * d]);
      }
      Tensor a = cached_attention(q, c.self_k, c.self_v, steps, h + 1, cfg.num_heads);
      a = add_row(matmul(a, self.wo), self.bo);
      x = norm(p, layer_name("dec", l, "ln1"), add(x, a));

      const auto cross = model.attention_params(layer_name("dec", l, "cross"));
      const Tensor qc = add_row(matmul(x, cross.wq), cross.bq);
      Tensor ac = cached_attention(qc, c.cross_k.data(), c.cross_v.data(), 0,
                                   cfg.context_length, cfg.num_heads);
      ac = add_row(matmul(ac, cross.wo), cross.bo);
      x = norm(p, layer_name("dec", l, "ln2"), add(x, ac));
      x = norm(p, layer_name("dec", l, "ln3"),
               add(x, feedforward(p, layer_name("dec", l, "ff"), x)));
    }
    const Tensor mu = add_row(matmul(x, p.get("head.mu.w")), p.get("head.mu.b"));
    const Tensor sigma = add_scalar(
        softplus(add_row(matmul(x, p.get("head.sigma.w")), p.get("head.sigma.b"))),
        kSigmaFloor);
    const Tensor nu =
        add_scalar(softplus(add_row(matmul(x, p.get("head.nu.w")), p.get("head.nu.b"))), 2.0);
    StepParams& sp = out[h];
    sp.mu.assign(mu.data().begin(), mu.data().end());
    sp.sigma.assign(sigma.data().begin(), sigma.data().end());
    sp.nu.assign(nu.data().begin(), nu.data().end());
    for (std::size_t s = 0; s < samples; ++s) {
      fed[s * steps + h] = choose(s, h, sp.mu[s], sp.sigma[s], sp.nu[s]);
    }
  }
  return out;
}

} // namespace

TransformerForecaster::TransformerForecaster(ModelConfig config, std::uint64_t seed)
    : Forecaster(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.d_model;
  const std::size_t ff = config_.feedforward_dim;
  Initializer init(seed);
  params_.add("input.w", init.xavier(config_.input_dim(), d));
  params_.add("input.b", init.zeros(d));
  if (config_.embedding_dimension > 0) {
    params_.add("embedding", init.normal(config_.cardinality, config_.embedding_dimension));
  }
  for (std::size_t l = 0; l < config_.num_layers_encoder; ++l) {
    add_attention(params_, init, layer_name("enc", l, "attn"), d);
    add_norm(params_, init, layer_name("enc", l, "ln1"), d);
    add_feedforward(params_, init, layer_name("enc", l, "ff"), d, ff);
    add_norm(params_, init, layer_name("enc", l, "ln2"), d);
  }
  for (std::size_t l = 0; l < config_.num_layers_decoder; ++l) {
    add_attention(params_, init, layer_name("dec", l, "self"), d);
    add_norm(params_, init, layer_name("dec", l, "ln1"), d);
    add_attention(params_, init, layer_name("dec", l, "cross"), d);
    add_norm(params_, init, layer_name("dec", l, "ln2"), d);
    add_feedforward(params_, init, layer_name("dec", l, "ff"), d, ff);
    add_norm(params_, init, layer_name("dec", l, "ln3"), d);
  }
  for (const char* h : {"mu", "sigma", "nu"}) {
    params_.add(std::string("head.") + h + ".w", init.xavier(d, 1));
    params_.add(std::string("head.") + h + ".b", init.zeros(1));
  }
}

AttentionParams TransformerForecaster::attention_params(const std::string& prefix) const {
  const auto& p = params_;
  return {p.get(prefix + ".wq"), p.get(prefix + ".bq"), p.get(prefix + ".wk"),
          p.get(prefix + ".bk"), p.get(prefix + ".wv"), p.get(prefix + ".bv"),
          p.get(prefix + ".wo"), p.get(prefix + ".bo")};
}

Tensor TransformerForecaster::project(const Tensor& features, std::int64_t category) const {
  Tensor x = features;
  if (config_.embedding_dimension > 0) {
    const std::int64_t idx[] = {category};
    const Tensor e = embedding_lookup(params_.get("embedding"), idx);
    x = concat({features, repeat_rows(e, features.rows())}, 1);
  }
  return add_row(matmul(x, params_.get("input.w")), params_.get("input.b"));
}

Tensor TransformerForecaster::embed(const Tensor& features, std::int64_t category,
                                    std::size_t position_offset) const {
  const Tensor x = project(features, category);
  if (!config_.positional_encoding) {
    return x;
  }
  return add(x, positional_encoding(position_offset, x.rows(), config_.d_model));
}

Tensor TransformerForecaster::encoder_layers(Tensor x, std::mt19937_64* rng,
                                             std::vector<Tensor>* attention) const {
  const double p = config_.dropout;
  for (std::size_t l = 0; l < config_.num_layers_encoder; ++l) {
    const Tensor a = multi_head_attention(x, x, attention_params(layer_name("enc", l, "attn")),
                                          config_.num_heads, false, attention);
    x = norm(params_, layer_name("enc", l, "ln1"), add(x, maybe_dropout(a, p, rng)));
    const Tensor f = feedforward(params_, layer_name("enc", l, "ff"), x);
    x = norm(params_, layer_name("enc", l, "ln2"), add(x, maybe_dropout(f, p, rng)));
  }
  return x;
}

Tensor TransformerForecaster::encode(const ForecastInput& input, std::mt19937_64* rng,
                                     std::vector<Tensor>* attention) const {
  const Tensor x = embed(context_features(input, config_), input.static_categorical.at(0), 0);
  return encoder_layers(maybe_dropout(x, config_.dropout, rng), rng, attention);
}

StudentT TransformerForecaster::decode(const Tensor& memory, Tensor x, std::mt19937_64* rng,
                                       std::vector<Tensor>* attention) const {
  const double p = config_.dropout;
  for (std::size_t l = 0; l < config_.num_layers_decoder; ++l) {
    const Tensor a = multi_head_attention(x, x, attention_params(layer_name("dec", l, "self")),
                                          config_.num_heads, true, attention);
    x = norm(params_, layer_name("dec", l, "ln1"), add(x, maybe_dropout(a, p, rng)));
    const Tensor c = multi_head_attention(
        x, memory, attention_params(layer_name("dec", l, "cross")), config_.num_heads, false,
        attention);
    x = norm(params_, layer_name("dec", l, "ln2"), add(x, maybe_dropout(c, p, rng)));
    const Tensor f = feedforward(params_, layer_name("dec", l, "ff"), x);
    x = norm(params_, layer_name("dec", l, "ln3"), add(x, maybe_dropout(f, p, rng)));
  }
  StudentT out;
  out.mu = add_row(matmul(x, params_.get("head.mu.w")), params_.get("head.mu.b"));
  out.sigma = add_scalar(
      softplus(add_row(matmul(x, params_.get("head.sigma.w")), params_.get("head.sigma.b"))),
      kSigmaFloor);
  out.nu = add_scalar(
      softplus(add_row(matmul(x, params_.get("head.nu.w")), params_.get("head.nu.b"))), 2.0);
  return out;
}

StudentT TransformerForecaster::forward(const ForecastInput& input, std::mt19937_64* rng) const {
  if (!input.has_targets()) {
    throw Error(Errc::kShapeMismatch, "teacher forcing needs horizon targets");
  }
  const Tensor memory = encode(input, rng);
  const Tensor features =
      horizon_features(input, config_, input.future_values, config_.prediction_length);
  Tensor x = embed(features, input.static_categorical.at(0), config_.context_length);
  return decode(memory, maybe_dropout(x, config_.dropout, rng), rng);
}

StudentT TransformerForecaster::decode_incremental(const ForecastInput& input,
                                                   std::span<const double> future) const {
  const std::size_t steps = config_.prediction_length;
  const auto params = run_decoder(*this, input, 1, steps,
                                  [&](std::size_t, std::size_t h, double, double, double) {
                                    return h < future.size() ? future[h] : 0.0;
                                  });
  std::vector<double> mu(steps), sigma(steps), nu(steps);
  for (std::size_t h = 0; h < steps; ++h) {
    mu[h] = params[h].mu[0];
    sigma[h] = params[h].sigma[0];
    nu[h] = params[h].nu[0];
  }
  return {Tensor({steps, 1}, std::move(mu)), Tensor({steps, 1}, std::move(sigma)),
          Tensor({steps, 1}, std::move(nu))};
}

ForecastDistribution TransformerForecaster::forecast(const ForecastInput& input,
                                                     std::size_t num_samples,
                                                     std::uint64_t seed,
                                                     std::size_t steps) const {
  if (steps == 0 || steps > config_.prediction_length) {
    steps = config_.prediction_length;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> raw(num_samples * steps);
  run_decoder(*this, input, num_samples, steps,
              [&](std::size_t s, std::size_t h, double mu, double sigma, double nu) {
                const double z = mu + sigma * std::student_t_distribution<double>(nu)(rng);
                raw[s * steps + h] = z * input.scale.std + input.scale.mean;
                return z;
              });
  return make_distribution(num_samples, steps, std::move(raw));
}

} // namespace coldstart::forecaster
