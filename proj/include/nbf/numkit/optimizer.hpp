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
#include <string_view>
#include <utility>

#include "nbf/numkit/dense_array.hpp"

namespace nbf::numkit {

enum class OptimizerKind { kAdagrad, kAdam, kNadam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

inline constexpr double kOptEpsilon = 1e-8;
inline constexpr double kBeta1 = 0.9;
inline constexpr double kBeta2 = 0.999;

/// Accumulators for one of the standard first-order optimizers:
///  - adagrad: acc += g^2;  p -= lr * g / sqrt(acc + eps)
///  - adam:    bias-corrected moments; p -= lr * m_hat / (sqrt(v_hat) + eps)
///  - nadam:   adam with a Nesterov look-ahead on the first moment
struct OptState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  ParamSet first;   // adagrad: squared-gradient sum; adam/nadam: first moment
  ParamSet second;  // adam/nadam: second moment; unused by adagrad
  std::uint64_t step_count = 0;
};

OptState make_opt_state(OptimizerKind kind, double learning_rate, const ParamSet& params);

/// Applies one update in place. Throws std::invalid_argument if any gradient
/// is NaN or the layouts differ; nothing is modified in that case.
void optimizer_step_inplace(OptState& state, ParamSet& params, const ParamSet& grads);

/// Functional form of optimizer_step_inplace.
std::pair<OptState, ParamSet> optimizer_step(OptState state, ParamSet params,
                                             const ParamSet& grads);

}  // namespace nbf::numkit
