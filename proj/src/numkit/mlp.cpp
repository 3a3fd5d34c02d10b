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

#include "nbf/numkit/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace nbf::numkit {

void MlpSpec::validate() const {
  if (input_dim < 1 || hidden_units < 1 || hidden_layers < 1 || output_dim < 1) {
    throw std::invalid_argument("MlpSpec: all dimensions must be >= 1");
  }
}

std::string weight_name(const std::string& prefix, int layer) {
  return prefix + ".w" + std::to_string(layer);
}

std::string bias_name(const std::string& prefix, int layer) {
  return prefix + ".b" + std::to_string(layer);
}

namespace {

std::pair<int, int> layer_dims(const MlpSpec& spec, int layer) {
  const int fan_in = layer == 0 ? spec.input_dim : spec.hidden_units;
  const int fan_out = layer == spec.hidden_layers ? spec.output_dim : spec.hidden_units;
  return {fan_in, fan_out};
}

}  // namespace

void mlp_init(const MlpSpec& spec, const std::string& prefix, ParamSet& params, RngStream& rng,
              bool zero_output) {
  spec.validate();
  for (int l = 0; l < spec.linear_layers(); ++l) {
    const auto [fan_in, fan_out] = layer_dims(spec, l);
    DenseArray w({static_cast<std::size_t>(fan_in), static_cast<std::size_t>(fan_out)});
    const bool zero = zero_output && l == spec.hidden_layers;
    if (!zero) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : w.data) v = rng.uniform(-limit, limit);
    }
    params.add(weight_name(prefix, l), std::move(w));
    params.add(bias_name(prefix, l), DenseArray({static_cast<std::size_t>(fan_out)}));
  }
}

void mlp_check(const MlpSpec& spec, const std::string& prefix, const ParamSet& params) {
  spec.validate();
  for (int l = 0; l < spec.linear_layers(); ++l) {
    const auto [fan_in, fan_out] = layer_dims(spec, l);
    const std::vector<std::size_t> ws = {static_cast<std::size_t>(fan_in),
                                         static_cast<std::size_t>(fan_out)};
    const std::vector<std::size_t> bs = {static_cast<std::size_t>(fan_out)};
    const std::string wn = weight_name(prefix, l);
    const std::string bn = bias_name(prefix, l);
    if (!params.contains(wn)) throw std::invalid_argument("mlp: missing group " + wn);
    if (!params.contains(bn)) throw std::invalid_argument("mlp: missing group " + bn);
    if (params.at(wn).shape != ws) {
      throw std::invalid_argument("mlp: group " + wn + " has shape " +
                                  params.at(wn).shape_string() + ", expected [" +
                                  std::to_string(fan_in) + "," + std::to_string(fan_out) + "]");
    }
    if (params.at(bn).shape != bs) {
      throw std::invalid_argument("mlp: group " + bn + " has shape " +
                                  params.at(bn).shape_string() + ", expected [" +
                                  std::to_string(fan_out) + "]");
    }
  }
}

Var mlp_apply(const MlpSpec& spec, const ParamVars& params, const std::string& prefix, Var input) {
  if (input.cols() != spec.input_dim) {
    throw std::invalid_argument("mlp '" + prefix + "': input has " +
                                std::to_string(input.cols()) + " columns, expected " +
                                std::to_string(spec.input_dim));
  }
  Var h = input;
  for (int l = 0; l < spec.linear_layers(); ++l) {
    h = add(matmul(h, params[weight_name(prefix, l)]), params[bias_name(prefix, l)]);
    if (l < spec.hidden_layers) {
      h = spec.activation == Activation::kRelu ? relu(h) : tanh(h);
    }
  }
  return h;
}

DenseArray mlp_apply(const MlpSpec& spec, const ParamSet& params, const DenseArray& input,
                     const std::string& prefix) {
  mlp_check(spec, prefix, params);
  const bool single = input.rank() == 1;
  const std::size_t rows = single ? 1 : input.shape.front();
  const std::size_t cols = single ? input.shape.front() : input.cols();
  if (cols != static_cast<std::size_t>(spec.input_dim)) {
    throw std::invalid_argument("mlp '" + prefix + "': input last dimension " +
                                std::to_string(cols) + " != " + std::to_string(spec.input_dim));
  }
  Tape tape;
  ParamVars vars(tape, params, /*track=*/false);
  Matrix x = Eigen::Map<const Matrix>(input.data.data(), static_cast<Index>(rows),
                                      static_cast<Index>(cols));
  const Matrix& out = mlp_apply(spec, vars, prefix, tape.constant(std::move(x))).value();
  std::vector<std::size_t> shape =
      single ? std::vector<std::size_t>{static_cast<std::size_t>(spec.output_dim)}
             : std::vector<std::size_t>{rows, static_cast<std::size_t>(spec.output_dim)};
  return to_array(out, shape);
}

}  // namespace nbf::numkit
