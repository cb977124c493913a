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

#include <fstream>
#include <sstream>

#include "coldstart/error.hpp"
#include "coldstart/forecaster.hpp"

namespace coldstart::forecaster {

nlohmann::json checkpoint_to_json(const Forecaster& model) {
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& [name, t] : model.params().entries()) {
    weights.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"data", std::vector<double>(t.data().begin(), t.data().end())}});
  }
  return {{"version", kCheckpointVersion},
          {"kind", model.kind()},
          {"config", config_to_json(model.config())},
          {"weights", std::move(weights)}};
}

std::unique_ptr<Forecaster> checkpoint_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(Errc::kBadCheckpoint, "unsupported checkpoint version " +
                                            std::to_string(version));
    }
    auto model = make_forecaster(j.at("kind").get<std::string>(),
                                 config_from_json(j.at("config")), 0);
    const auto& weights = j.at("weights");
    if (weights.size() != model->params().entries().size()) {
      throw Error(Errc::kBadCheckpoint, "expected " +
                                            std::to_string(model->params().entries().size()) +
                                            " weight arrays, found " +
                                            std::to_string(weights.size()));
    }
    for (const auto& w : weights) {
      const auto name = w.at("name").get<std::string>();
      ad::Tensor& t = model->params().get(name);
      const auto shape = w.at("shape").get<ad::Shape>();
      const auto data = w.at("data").get<std::vector<double>>();
      if (shape != t.shape() || data.size() != t.size()) {
        throw Error(Errc::kBadCheckpoint, name + " has shape " + ad::shape_str(shape) +
                                              ", expected " + ad::shape_str(t.shape()));
      }
      std::copy(data.begin(), data.end(), t.mutable_data().begin());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadCheckpoint, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::kBadCheckpoint) {
      throw;
    }
    throw Error(Errc::kBadCheckpoint, e.what());
  }
}

void save_checkpoint(const Forecaster& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(Errc::kIo, "cannot write " + path);
  }
  out << checkpoint_to_json(model).dump() << '\n';
}

std::unique_ptr<Forecaster> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::kIo, "cannot read " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBadCheckpoint, path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

nlohmann::json forecast_to_json(const ForecastDistribution& d, const std::string& function_id,
                                std::size_t t0, const std::string& granularity,
                                std::uint64_t seed) {
  return {{"functionId", function_id},
          {"t0", t0},
          {"granularity", granularity},
          {"pointForecast", d.point_forecast},
          {"quantiles", {{"0.5", d.quantiles(0.5)}, {"0.9", d.quantiles(0.9)}}},
          {"numSamples", d.num_samples},
          {"seed", seed}};
}

} // namespace coldstart::forecaster
