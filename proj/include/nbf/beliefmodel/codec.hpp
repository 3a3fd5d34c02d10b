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

// Bridges environment states and the real-valued codes a belief model sees.

#include <span>
#include <vector>

#include "nbf/beliefmodel/model.hpp"
#include "nbf/envs/env.hpp"

namespace nbf::beliefmodel {

template <envs::FilterEnv Env>
Matrix encode_states(const Env& env, std::span<const typename Env::State> states) {
  const int d = env.state_dim();
  Matrix out(static_cast<Index>(states.size()), d);
  std::vector<double> buf(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < states.size(); ++i) {
    env.encode(states[i], buf);
    for (int j = 0; j < d; ++j) out(static_cast<Index>(i), j) = buf[static_cast<std::size_t>(j)];
  }
  return out;
}

template <envs::FilterEnv Env>
Embedding embed_states(const BeliefModel& model, const Env& env, std::span<const typename Env::State> states,
                       std::span<const double> weights) {
  return embed(model, encode_states(env, states), weights);
}

template <typename State>
struct StateSamples {
  std::vector<State> states;
  int clamped = 0;  // draws that had to be moved onto the legal lattice

  [[nodiscard]] double clamp_rate() const {
    return states.empty() ? 0.0 : static_cast<double>(clamped) / static_cast<double>(states.size());
  }
};

/// Maps codes back to states through Env::decode. `anchor` supplies the
/// public components shared by every state at the current step.
template <envs::FilterEnv Env>
StateSamples<typename Env::State> decode_codes(const Env& env, const Matrix& codes,
                                               const typename Env::State& anchor) {
  StateSamples<typename Env::State> out;
  out.states.reserve(static_cast<std::size_t>(codes.rows()));
  std::vector<double> buf(static_cast<std::size_t>(codes.cols()));
  for (Index i = 0; i < codes.rows(); ++i) {
    for (Index j = 0; j < codes.cols(); ++j) buf[static_cast<std::size_t>(j)] = codes(i, j);
    auto dec = env.decode(buf, anchor);
    out.clamped += dec.clamped ? 1 : 0;
    out.states.push_back(std::move(dec.state));
  }
  return out;
}

template <envs::FilterEnv Env>
StateSamples<typename Env::State> sample_states(const BeliefModel& model, const Env& env, const Embedding& theta,
                                                int n, const typename Env::State& anchor, numkit::RngStream& rng) {
  return decode_codes(env, sample_codes(model, theta, n, rng), anchor);
}

}  // namespace nbf::beliefmodel
