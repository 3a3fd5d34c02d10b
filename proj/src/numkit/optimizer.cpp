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

#include "nbf/numkit/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nbf::numkit {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "nadam") return OptimizerKind::kNadam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kNadam: return "nadam";
  }
  return "?";
}

OptState make_opt_state(OptimizerKind kind, double learning_rate, const ParamSet& params) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  OptState s;
  s.kind = kind;
  s.learning_rate = learning_rate;
  s.first = params.zeros_like();
  if (kind != OptimizerKind::kAdagrad) s.second = params.zeros_like();
  return s;
}

void optimizer_step_inplace(OptState& state, ParamSet& params, const ParamSet& grads) {
  params.check_same_layout(grads, "optimizer_step: grads");
  params.check_same_layout(state.first, "optimizer_step: accumulators");
  for (const auto& [name, g] : grads) {
    for (double v : g.data) {
      if (std::isnan(v)) throw std::invalid_argument("optimizer_step: NaN gradient in " + name);
    }
  }
  const std::uint64_t t = state.step_count + 1;
  const double lr = state.learning_rate;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double bc1_next = 1.0 - std::pow(kBeta1, static_cast<double>(t + 1));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));

  auto p_it = params.begin();
  auto m_it = state.first.begin();
  auto g_it = grads.begin();
  for (; p_it != params.end(); ++p_it, ++m_it, ++g_it) {
    std::vector<double>& p = p_it->second.data;
    std::vector<double>& m = m_it->second.data;
    const std::vector<double>& g = g_it->second.data;
    if (state.kind == OptimizerKind::kAdagrad) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] += g[i] * g[i];
        p[i] -= lr * g[i] / std::sqrt(m[i] + kOptEpsilon);
      }
      continue;
    }
    std::vector<double>& v = state.second.at(p_it->first).data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      const double v_hat = v[i] / bc2;
      double m_hat = m[i] / bc1;
      if (state.kind == OptimizerKind::kNadam) {
        m_hat = kBeta1 * m[i] / bc1_next + (1.0 - kBeta1) * g[i] / bc1;
      }
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + kOptEpsilon);
    }
  }
  state.step_count = t;
}

std::pair<OptState, ParamSet> optimizer_step(OptState state, ParamSet params,
                                             const ParamSet& grads) {
  optimizer_step_inplace(state, params, grads);
  return {std::move(state), std::move(params)};
}

}  // namespace nbf::numkit
