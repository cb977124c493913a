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

// Probabilistic forecasting of invocation counts and inter-arrival gaps.
//
// Values are standardized by the context mean and standard deviation. Every
// position j (context or horizon) is described by the same feature row:
//   [z[j - lag] for lag in lagsSequence] ++ timeFeatures(j) ++ staticEmbedding
// so the decoder sees the previous value through lag 1. The model emits a
// Student-t distribution per horizon step.

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/tensor.hpp"
#include "coldstart/trace.hpp"

namespace coldstart::forecaster {

inline constexpr std::size_t kNumTimeFeatures = 5;
inline constexpr double kScaleFloor = 1e-3;
/// Lower bound added to the emitted Student-t scale.
inline constexpr double kSigmaFloor = 1e-3;

std::vector<std::size_t> default_lags(trace::Granularity g);
/// Lags for event-indexed gap series.
std::vector<std::size_t> default_gap_lags();

struct ModelConfig {
  std::size_t context_length = 200;
  std::size_t prediction_length = 100;
  std::size_t num_layers_encoder = 4;
  std::size_t num_layers_decoder = 4;
  std::size_t d_model = 32;
  std::size_t num_heads = 4;
  std::size_t embedding_dimension = 2;
  std::size_t cardinality = 1;
  std::vector<std::size_t> lags_sequence = default_lags(trace::Granularity::kHour);
  std::size_t feedforward_dim = 128;
  double dropout = 0.1;
  bool positional_encoding = true;
  /// Hidden width of the recurrent baseline.
  std::size_t hidden_size = 32;

  /// Throws BadConfig.
  void validate() const;
  std::size_t max_lag() const { return lags_sequence.empty() ? 0 : lags_sequence.back(); }
  std::size_t input_dim() const {
    return lags_sequence.size() + kNumTimeFeatures + embedding_dimension;
  }
  /// Steps of history needed before the first forecast step.
  std::size_t required_history() const { return context_length + max_lag(); }

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

using TimeFeatureRow = std::array<double, kNumTimeFeatures>;

/// Calendar features for the step `index` of a uniform series, each mapped
/// to [-0.5, 0.5]: minute-of-hour, hour-of-day, day-of-week (Monday low),
/// day-of-month and age = log1p(index) / log1p(age_horizon).
TimeFeatureRow time_features_at(trace::Timestamp start, trace::Granularity g,
                                std::size_t index, std::size_t age_horizon);

/// Rows for steps [begin, begin + count), row-major [count x 5].
std::vector<double> make_time_features(trace::Timestamp start, trace::Granularity g,
                                       std::size_t begin, std::size_t count,
                                       std::size_t age_horizon);

struct ScaleStats {
  double mean = 0.0;
  double std = 1.0;
};

/// One forecast origin t0: history before t0 and (optionally) the targets at
/// t0 .. t0 + predictionLength - 1.
struct ForecastInput {
  std::size_t t0 = 0;
  /// Standardized values at t0 - required_history() .. t0 - 1.
  std::vector<double> past_values;
  /// [past_values.size() x 5]
  std::vector<double> past_time_features;
  std::vector<std::int64_t> static_categorical{0};
  /// [predictionLength x 5]
  std::vector<double> future_time_features;
  /// Standardized targets; empty when the horizon lies beyond the data.
  std::vector<double> future_values;
  ScaleStats scale;

  bool has_targets() const { return !future_values.empty(); }
  /// Targets in the original units.
  std::vector<double> raw_targets() const;
};

using TimeFeatureFn = std::function<TimeFeatureRow(std::size_t index)>;

/// Generic assembly over raw values; `features(j)` describes step j.
/// Requires t0 >= required_history() and t0 <= values.size(); targets are
/// attached when t0 + predictionLength <= values.size().
ForecastInput build_input_from_values(std::span<const double> values, std::size_t t0,
                                      const ModelConfig& config,
                                      const TimeFeatureFn& features,
                                      std::int64_t category = 0);

/// Throws InsufficientHistory.
ForecastInput build_input(const trace::InvocationSeries& s, std::size_t t0,
                          const ModelConfig& config, std::int64_t category = 0);

/// Gap series carry only the age feature; calendar columns are zero.
ForecastInput build_gap_input(std::span<const double> gaps, std::size_t t0,
                              const ModelConfig& config, std::int64_t category = 0);

/// Training origins every `stride` steps whose horizons end at or before
/// `end` (exclusive), in increasing t0 order.
std::vector<std::size_t> training_origins(std::size_t end, const ModelConfig& config,
                                          std::size_t stride);

/// Value and time-feature columns for the context positions
/// [contextLength x (lags + 5)]; the static embedding is appended by models.
ad::Tensor context_features(const ForecastInput& input, const ModelConfig& config);
/// The same columns for horizon steps 0 .. rows - 1. Lags that fall inside
/// the horizon read `future` (standardized values of earlier steps).
ad::Tensor horizon_features(const ForecastInput& input, const ModelConfig& config,
                            std::span<const double> future, std::size_t rows);

/// [count x d] sinusoidal encodings for positions offset .. offset + count - 1.
ad::Tensor positional_encoding(std::size_t offset, std::size_t count, std::size_t d);

/// Student-t parameters per horizon step.
struct StudentT {
  ad::Tensor mu;    // [H x 1]
  ad::Tensor sigma; // [H x 1], > 0
  ad::Tensor nu;    // [H x 1], > 2
};

/// Mean Student-t negative log-likelihood of `targets` ([H x 1]).
ad::Tensor nll_loss(const StudentT& dist, const ad::Tensor& targets);
double student_t_log_density(double y, double mu, double sigma, double nu);

struct ForecastDistribution {
  std::size_t num_samples = 0;
  std::size_t steps = 0;
  /// De-standardized draws [num_samples x steps].
  std::vector<double> raw_samples;
  /// raw_samples clamped at 0.
  std::vector<double> samples;
  /// Per-step median of `samples`.
  std::vector<double> point_forecast;

  double sample(std::size_t s, std::size_t t) const { return samples[s * steps + t]; }
  /// Linear-interpolated empirical quantile of step t.
  double quantile(double q, std::size_t t) const;
  std::vector<double> quantiles(double q) const;
  /// Rounded non-negative integer draws.
  std::vector<std::int64_t> count_samples() const;
};

/// Builds a distribution (clamp, median) from raw draws.
ForecastDistribution make_distribution(std::size_t num_samples, std::size_t steps,
                                       std::vector<double> raw_samples);

struct AttentionParams {
  ad::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Scaled dot-product attention with `num_heads` heads. Softmax weights of
/// each head are appended to `weights_out` when given.
ad::Tensor multi_head_attention(const ad::Tensor& query_input, const ad::Tensor& kv_input,
                                const AttentionParams& p, std::size_t num_heads,
                                bool causal, std::vector<ad::Tensor>* weights_out = nullptr);

/// Named parameter tensors in a fixed registration order.
class ParameterSet {
 public:
  ad::Tensor& add(const std::string& name, ad::Tensor t);
  ad::Tensor& get(const std::string& name);
  const ad::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::pair<std::string, ad::Tensor>>& entries() { return entries_; }
  const std::vector<std::pair<std::string, ad::Tensor>>& entries() const { return entries_; }
  std::vector<ad::Tensor> tensors() const;
  std::size_t count() const;

 private:
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
};

/// Common contract of the Transformer and the recurrent baseline.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string kind() const = 0;
  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Teacher-forced distribution parameters over the full horizon. Dropout
  /// is applied only when `rng` is given.
  virtual StudentT forward(const ForecastInput& input,
                           std::mt19937_64* rng = nullptr) const = 0;

  /// Autoregressive sampling of the first `steps` horizon steps
  /// (0 = predictionLength). Draws feed back as the lag values.
  virtual ForecastDistribution forecast(const ForecastInput& input, std::size_t num_samples,
                                        std::uint64_t seed, std::size_t steps = 0) const = 0;

 protected:
  explicit Forecaster(ModelConfig config) : config_(std::move(config)) {}

  ModelConfig config_;
  ParameterSet params_;
};

/// Encoder/decoder Transformer with a Student-t head.
class TransformerForecaster : public Forecaster {
 public:
  /// Weights are initialized from `seed`.
  explicit TransformerForecaster(ModelConfig config, std::uint64_t seed = 0);

  std::string kind() const override { return "transformer"; }
  StudentT forward(const ForecastInput& input, std::mt19937_64* rng = nullptr) const override;
  ForecastDistribution forecast(const ForecastInput& input, std::size_t num_samples,
                                std::uint64_t seed, std::size_t steps = 0) const override;

  /// Input projection of feature rows plus the static embedding (no
  /// positional encoding).
  ad::Tensor project(const ad::Tensor& features, std::int64_t category) const;
  /// project() plus positional encodings for consecutive positions.
  ad::Tensor embed(const ad::Tensor& features, std::int64_t category,
                   std::size_t position_offset) const;
  /// Encoder stack over already-embedded rows.
  ad::Tensor encoder_layers(ad::Tensor x, std::mt19937_64* rng = nullptr,
                            std::vector<ad::Tensor>* attention = nullptr) const;
  ad::Tensor encode(const ForecastInput& input, std::mt19937_64* rng = nullptr,
                    std::vector<ad::Tensor>* attention = nullptr) const;
  /// Decoder stack over embedded rows followed by the distribution head.
  StudentT decode(const ad::Tensor& memory, ad::Tensor x, std::mt19937_64* rng = nullptr,
                  std::vector<ad::Tensor>* attention = nullptr) const;

  /// Incremental (cached) decoding of one trajectory whose decoder lags
  /// read `future`; must equal forward() with the same values.
  StudentT decode_incremental(const ForecastInput& input,
                              std::span<const double> future) const;

  AttentionParams attention_params(const std::string& prefix) const;
};

/// Single-layer GRU over the same feature rows, with the same head.
class GruForecaster : public Forecaster {
 public:
  explicit GruForecaster(ModelConfig config, std::uint64_t seed = 0);

  std::string kind() const override { return "gru"; }
  StudentT forward(const ForecastInput& input, std::mt19937_64* rng = nullptr) const override;
  ForecastDistribution forecast(const ForecastInput& input, std::size_t num_samples,
                                std::uint64_t seed, std::size_t steps = 0) const override;

  /// One recurrence step for a batch of rows: x [B x inputDim], h [B x hidden].
  ad::Tensor step(const ad::Tensor& x, const ad::Tensor& h) const;
};

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, ModelConfig config,
                                            std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// "constant", or "warmupCosine": linear warmup over warmup_fraction of
  /// the steps, then cosine decay to zero.
  std::string schedule = "constant";
  double warmup_fraction = 0.05;
  /// Global gradient-norm clip per batch; 0 disables clipping.
  double clip_norm = 0.0;
};

/// Learning rate at optimizer step `step` (0-based) of `total_steps`.
double scheduled_rate(const TrainConfig& c, std::size_t step, std::size_t total_steps);

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainResult {
  std::vector<double> epoch_loss; // mean NLL per epoch
};

/// Adam on the mean NLL with teacher forcing. Throws NonFinite naming the
/// epoch and batch on a non-finite loss.
TrainResult train(Forecaster& model, const std::vector<ForecastInput>& windows,
                  const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

/// forecast[t] = history[len - period + t], continuing into its own output.
std::vector<double> seasonal_naive(std::span<const double> history, std::size_t period,
                                   std::size_t horizon);

inline constexpr int kCheckpointVersion = 1;

/// {version, kind, config, weights: [{name, shape, data}]}
nlohmann::json checkpoint_to_json(const Forecaster& model);
std::unique_ptr<Forecaster> checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Forecaster& model, const std::string& path);
std::unique_ptr<Forecaster> load_checkpoint(const std::string& path);

/// {functionId, t0, granularity, pointForecast, quantiles: {"0.5", "0.9"}, numSamples, seed}
nlohmann::json forecast_to_json(const ForecastDistribution& d, const std::string& function_id,
                                std::size_t t0, const std::string& granularity,
                                std::uint64_t seed);

} // namespace coldstart::forecaster
