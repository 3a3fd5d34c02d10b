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

#include <string>

#include "nbf/numkit/autodiff.hpp"
#include "nbf/numkit/dense_array.hpp"
#include "nbf/numkit/rng.hpp"

namespace nbf::numkit {

enum class Activation { kRelu, kTanh };

/// Fully connected network: input -> hidden_layers x hidden_units -> output.
/// The activation follows every hidden layer; the output layer is linear.
struct MlpSpec {
  int input_dim = 1;
  int hidden_units = 1;
  int hidden_layers = 1;
  int output_dim = 1;
  Activation activation = Activation::kRelu;

  [[nodiscard]] int linear_layers() const noexcept { return hidden_layers + 1; }
  /// Throws std::invalid_argument if any dimension is < 1.
  void validate() const;
};

/// Parameter group names are "<prefix>.w<i>" (fan_in x fan_out) and
/// "<prefix>.b<i>" (fan_out) for i in [0, linear_layers()).
std::string weight_name(const std::string& prefix, int layer);
std::string bias_name(const std::string& prefix, int layer);

/// Glorot-uniform weights, zero biases. With `zero_output` the final layer's
/// weights are zero as well, so the network starts as a constant 0.
void mlp_init(const MlpSpec& spec, const std::string& prefix, ParamSet& params, RngStream& rng,
              bool zero_output = false);

/// Throws std::invalid_argument naming the first group whose shape is wrong.
void mlp_check(const MlpSpec& spec, const std::string& prefix, const ParamSet& params);

/// Tape version, rows of `input` are independent samples.
Var mlp_apply(const MlpSpec& spec, const ParamVars& params, const std::string& prefix, Var input);

/// Plain evaluation. `input` is [rows, input_dim] (or [input_dim] for one row).
DenseArray mlp_apply(const MlpSpec& spec, const ParamSet& params, const DenseArray& input,
                     const std::string& prefix = "mlp");

}  // namespace nbf::numkit
