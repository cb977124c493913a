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
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "coldstart/error.hpp"
#include "coldstart/forecaster.hpp"

namespace coldstart::forecaster {

namespace {

void validate(const TrainConfig& c) {
  if (c.batch_size == 0 || !(c.learning_rate >= 0.0)) {
    throw Error(Errc::kBadConfig, "batchSize must be positive and learningRate >= 0");
  }
  if (c.schedule != "constant" && c.schedule != "warmupCosine") {
    throw Error(Errc::kBadConfig, "unknown schedule '" + c.schedule + "'");
  }
  if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction <= 1.0) || !(c.clip_norm >= 0.0)) {
    throw Error(Errc::kBadConfig, "warmupFraction must lie in [0, 1] and clipNorm >= 0");
  }
}

} // namespace

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batchSize", c.batch_size},
          {"learningRate", c.learning_rate},
          {"seed", c.seed},
          {"schedule", c.schedule},
          {"warmupFraction", c.warmup_fraction},
          {"clipNorm", c.clip_norm}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batchSize", c.batch_size);
    c.learning_rate = j.value("learningRate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.schedule = j.value("schedule", c.schedule);
    c.warmup_fraction = j.value("warmupFraction", c.warmup_fraction);
    c.clip_norm = j.value("clipNorm", c.clip_norm);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadConfig, std::string("training config: ") + e.what());
  }
  validate(c);
  return c;
}

double scheduled_rate(const TrainConfig& c, std::size_t step, std::size_t total_steps) {
  if (c.schedule == "constant" || total_steps == 0) {
    return c.learning_rate;
  }
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warmup = std::ceil(c.warmup_fraction * total);
  if (s < warmup) {
    return c.learning_rate * (s + 1.0) / warmup;
  }
  const double progress = total > warmup ? (s - warmup) / (total - warmup) : 1.0;
  return 0.5 * c.learning_rate * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainResult train(Forecaster& model, const std::vector<ForecastInput>& windows,
                  const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  if (windows.empty()) {
    throw Error(Errc::kBadConfig, "no training windows");
  }
  validate(config);
  std::vector<ad::Tensor> leaves = model.params().tensors();
  std::vector<std::vector<double>> m(leaves.size()), v(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    m[i].assign(leaves[i].size(), 0.0);
    v[i].assign(leaves[i].size(), 0.0);
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batches = (windows.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0, batch = 0; begin < order.size();
         begin += config.batch_size, ++batch) {
      const std::size_t end = std::min(begin + config.batch_size, order.size());
      for (auto& leaf : leaves) {
        leaf.zero_grad();
      }
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const ForecastInput& w = windows[order[k]];
        ad::Tape tape;
        ad::TapeScope scope(tape);
        auto where = [&] {
          return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                 " (window t0 " + std::to_string(w.t0) + ")";
        };
        ad::Tensor loss;
        try {
          const StudentT dist = model.forward(w, &rng);
          loss = nll_loss(dist, ad::Tensor({w.future_values.size(), 1}, w.future_values));
        } catch (const Error& e) {
          if (e.code() != Errc::kDomainError) {
            throw;
          }
          throw Error(Errc::kNonFinite, std::string(e.what()) + " at " + where());
        }
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw Error(Errc::kNonFinite, "loss " + std::to_string(value) + " at " + where());
        }
        total += value;
        tape.backward(ad::scale(loss, weight));
      }

      double factor = 1.0;
      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& leaf : leaves) {
          for (double g : leaf.grad()) {
            sq += g * g;
          }
        }
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) {
          factor = config.clip_norm / norm;
        }
      }
      const double rate = scheduled_rate(config, step, total_steps);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto g = leaves[i].grad();
        if (g.empty()) {
          continue;
        }
        auto w = leaves[i].mutable_data();
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double gj = factor * g[j];
          m[i][j] = config.beta1 * m[i][j] + (1.0 - config.beta1) * gj;
          v[i][j] = config.beta2 * v[i][j] + (1.0 - config.beta2) * gj * gj;
          w[j] -= rate * (m[i][j] / c1) / (std::sqrt(v[i][j] / c2) + config.epsilon);
        }
      }
    }
    for (auto& leaf : leaves) {
      leaf.zero_grad();
    }
    result.epoch_loss.push_back(total / static_cast<double>(windows.size()));
    if (on_epoch) {
      on_epoch(epoch, result.epoch_loss.back());
    }
  }
  return result;
}

} // namespace coldstart::forecaster
