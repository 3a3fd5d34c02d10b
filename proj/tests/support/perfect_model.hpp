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

// A belief "model" that samples exactly from the oracle posterior. Theta is
// the step index into a precomputed exact trace, so embedding is pure
// bookkeeping and the filter's estimator is the only source of error.

#include <span>
#include <stdexcept>
#include <vector>

#include "nbf/beliefmodel/codec.hpp"
#include "nbf/oracle/exact.hpp"

namespace nbf::testing {

template <envs::DiscreteEnv Env>
class PerfectModel {
 public:
  using State = typename Env::State;
  using Theta = int;

  explicit PerfectModel(std::vector<oracle::DiscreteDist<State>> trace) : trace_(std::move(trace)) {}

  static PerfectModel from_observations(const Env& env, const std::vector<typename Env::Obs>& obs) {
    std::vector<oracle::DiscreteDist<State>> trace;
    trace.push_back(oracle::exact_init(env));
    for (const auto& y : obs) trace.push_back(oracle::exact_update(env, trace.back(), y));
    return PerfectModel(std::move(trace));
  }

  beliefmodel::StateSamples<State> sample(const Env&, const Theta& t, int n, const State&,
                                          numkit::RngStream& rng) const {
    return {belief(t).sample(static_cast<std::size_t>(n), rng), 0};
  }

  Theta embed(const Env&, std::span<const State>, std::span<const double>, int step) const {
    (void)belief(step);
    return step;
  }

  [[nodiscard]] const oracle::DiscreteDist<State>& belief(int t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= trace_.size()) throw std::out_of_range("perfect model: no belief for step");
    return trace_[static_cast<std::size_t>(t)];
  }

 private:
  std::vector<oracle::DiscreteDist<State>> trace_;
};

}  // namespace nbf::testing
