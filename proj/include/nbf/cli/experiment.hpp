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

#include <optional>
#include <variant>

#include "nbf/beliefmodel/train.hpp"
#include "nbf/cli/run_config.hpp"
#include "nbf/envs/goofspiel.hpp"
#include "nbf/envs/gridworld.hpp"
#include "nbf/envs/triangulation.hpp"
#include "nbf/numkit/rng.hpp"

namespace nbf::cli {

using AnyEnv = std::variant<envs::Gridworld, envs::Goofspiel, envs::Triangulation>;

/// Builds environment instances for a config: the single fixed instance, or
/// a fresh random one per call.
class Experiment {
 public:
  /// Throws std::invalid_argument for invalid environment settings.
  explicit Experiment(const EnvConfig& config);

  [[nodiscard]] int state_dim() const noexcept { return state_dim_; }
  /// Donuts have no filtering environment.
  [[nodiscard]] bool has_env() const noexcept { return fixed_.has_value(); }

  /// The fixed instance, or one drawn from `rng` in the random condition.
  [[nodiscard]] AnyEnv instance(numkit::RngStream& rng) const;

  template <typename Env>
  [[nodiscard]] Env make(numkit::RngStream& rng) const {
    return std::get<Env>(instance(rng));
  }

 private:
  AnyEnv draw(numkit::RngStream& rng) const;

  EnvConfig config_;
  bool random_ = false;
  std::optional<AnyEnv> fixed_;
  int state_dim_ = 2;
};

/// Where training distributions come from: exact posteriors for discrete
/// environments, a reference-filter particle pool for Triangulation, direct
/// draws for Donuts.
beliefmodel::DistributionSource training_source(const RunConfig& config);

}  // namespace nbf::cli
