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

#include "nbf/beliefmodel/config.hpp"

#include "nbf/beliefmodel/yaml_fields.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nbf::beliefmodel {

PriorKind parse_prior(std::string_view name) {
  if (name == "standard_normal") return PriorKind::kStandardNormal;
  if (name == "uniform") return PriorKind::kUniform;
  throw std::invalid_argument("unknown prior '" + std::string(name) + "'");
}

TransformKind parse_transform(std::string_view name) {
  if (name == "affine") return TransformKind::kAffine;
  if (name == "nlsq") return TransformKind::kNlsq;
  throw std::invalid_argument("unknown transform '" + std::string(name) + "'");
}

std::string_view to_string(PriorKind kind) {
  return kind == PriorKind::kUniform ? "uniform" : "standard_normal";
}

std::string_view to_string(TransformKind kind) {
  return kind == TransformKind::kNlsq ? "nlsq" : "affine";
}

namespace {

void require_positive(int v, const char* name) {
  if (v < 1) throw std::invalid_argument(std::string(name) + " must be >= 1, got " + std::to_string(v));
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

void ModelConfig::validate() const {
  require_positive(state_dim, "state_dim");
  require_positive(embedding_dim, "embedding_dim");
  require_positive(embed_units, "embed_units");
  require_positive(embed_layers, "embed_layers");
  require_positive(flow_units, "flow_units");
  require_positive(flow_layers, "flow_layers");
  require_positive(coupling_layers, "coupling_layers");
  if (state_dim >= 2 && coupling_layers < 2) {
    throw std::invalid_argument("coupling_layers must be >= 2 so every coordinate is transformed");
  }
  if (prior == PriorKind::kUniform) {
    const auto d = static_cast<std::size_t>(state_dim);
    if (domain_low.size() != d || domain_high.size() != d) {
      throw std::invalid_argument("uniform prior needs domain_low and domain_high of length state_dim");
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(domain_low[i]) || !std::isfinite(domain_high[i]) || !(domain_low[i] < domain_high[i])) {
        throw std::invalid_argument("uniform prior box is empty or not finite in dimension " + std::to_string(i));
      }
    }
  }
  if (dequantize) {
    require_positive(dequant_units, "dequant_units");
    require_positive(dequant_layers, "dequant_layers");
  }
}

void TrainConfig::validate() const {
  require_positive(batch_size, "batch_size");
  if (training_steps < 0) throw std::invalid_argument("training_steps must be >= 0");
  if (samples_per_distribution < 2 || samples_per_distribution % 2 != 0) {
    throw std::invalid_argument("samples_per_distribution must be even and >= 2");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
}

std::string to_yaml(const ModelConfig& c) {
  std::ostringstream out;
  auto vec = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + shortest(v[i]);
    return s + "]";
  };
  out << "state_dim: " << c.state_dim << '\n'
      << "embedding_dim: " << c.embedding_dim << '\n'
      << "embed_units: " << c.embed_units << '\n'
      << "embed_layers: " << c.embed_layers << '\n'
      << "flow_units: " << c.flow_units << '\n'
      << "flow_layers: " << c.flow_layers << '\n'
      << "coupling_layers: " << c.coupling_layers << '\n'
      << "transform: " << to_string(c.transform) << '\n'
      << "prior: " << to_string(c.prior) << '\n'
      << "domain_low: " << vec(c.domain_low) << '\n'
      << "domain_high: " << vec(c.domain_high) << '\n'
      << "dequantize: " << (c.dequantize ? "true" : "false") << '\n'
      << "dequant_units: " << c.dequant_units << '\n'
      << "dequant_layers: " << c.dequant_layers << '\n';
  return out.str();
}

ModelConfig model_config_from_yaml(const YAML::Node& node, ModelConfig c) {
  read_mapping(node,
               {
                   {"state_dim", field(c.state_dim)},
                   {"embedding_dim", field(c.embedding_dim)},
                   {"embed_units", field(c.embed_units)},
                   {"embed_layers", field(c.embed_layers)},
                   {"flow_units", field(c.flow_units)},
                   {"flow_layers", field(c.flow_layers)},
                   {"coupling_layers", field(c.coupling_layers)},
                   {"transform", [&](const YAML::Node& n) { c.transform = parse_transform(n.as<std::string>()); }},
                   {"prior", [&](const YAML::Node& n) { c.prior = parse_prior(n.as<std::string>()); }},
                   {"domain_low", field(c.domain_low)},
                   {"domain_high", field(c.domain_high)},
                   {"dequantize", field(c.dequantize)},
                   {"dequant_units", field(c.dequant_units)},
                   {"dequant_layers", field(c.dequant_layers)},
               },
               "model");
  return c;
}

TrainConfig train_config_from_yaml(const YAML::Node& node, TrainConfig c) {
  read_mapping(node,
               {
                   {"batch_size", field(c.batch_size)},
                   {"training_steps", field(c.training_steps)},
                   {"samples_per_distribution", field(c.samples_per_distribution)},
                   {"optimizer",
                    [&](const YAML::Node& n) { c.optimizer = numkit::parse_optimizer(n.as<std::string>()); }},
                   {"learning_rate", field(c.learning_rate)},
                   {"seed", field(c.seed)},
               },
               "train");
  return c;
}

std::string to_yaml(const TrainConfig& c) {
  std::ostringstream out;
  out << "batch_size: " << c.batch_size << '\n'
      << "training_steps: " << c.training_steps << '\n'
      << "samples_per_distribution: " << c.samples_per_distribution << '\n'
      << "optimizer: " << numkit::to_string(c.optimizer) << '\n'
      << "learning_rate: " << shortest(c.learning_rate) << '\n'
      << "seed: " << c.seed << '\n';
  return out.str();
}

ModelConfig parse_model_config(std::string_view yaml_text) {
  return model_config_from_yaml(YAML::Load(std::string(yaml_text)));
}

}  // namespace nbf::beliefmodel
