// Copyright 2026 The NBF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nbf/numkit/optimizer.hpp"

namespace YAML {
class Node;
}

namespace nbf::beliefmodel {

enum class PriorKind { kStandardNormal, kUniform };
enum class TransformKind { kAffine, kNlsq };

PriorKind parse_prior(std::string_view name);
TransformKind parse_transform(std::string_view name);
std::string_view to_string(PriorKind kind);
std::string_view to_string(TransformKind kind);

/// Architecture of a belief model. The flow stack maps prior noise z to
/// states x; every conditioner sees its pass-through coordinates and theta.
struct ModelConfig {
  int state_dim = 2;
  int embedding_dim = 32;
  int embed_units = 128;
  int embed_layers = 3;
  int flow_units = 32;
  int flow_layers = 5;  // hidden layers of each coupling conditioner
  int coupling_layers = 5;
  TransformKind transform = TransformKind::kAffine;
  PriorKind prior = PriorKind::kStandardNormal;
  // Box of the uniform prior, one entry per state dimension.
  std::vector<double> domain_low;
  std::vector<double> domain_high;
  bool dequantize = false;
  int dequant_units = 32;
  int dequant_layers = 2;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  int batch_size = 32;
  int training_steps = 1000;
  int samples_per_distribution = 64;  // first half embeds, second half is scored
  numkit::OptimizerKind optimizer = numkit::OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Error for malformed config documents. `line` is 1-based, 0 if unknown.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, int line) : std::invalid_argument(what), line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Block-style YAML with every field, used as the checkpoint header echo.
std::string to_yaml(const ModelConfig& config);
std::string to_yaml(const TrainConfig& config);
/// Missing keys keep the values in `base`; unknown keys raise ConfigError.
ModelConfig model_config_from_yaml(const YAML::Node& node, ModelConfig base = {});
TrainConfig train_config_from_yaml(const YAML::Node& node, TrainConfig base = {});
ModelConfig parse_model_config(std::string_view yaml_text);

}  // namespace nbf::beliefmodel
