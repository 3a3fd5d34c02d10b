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

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbf/beliefmodel/config.hpp"
#include "nbf/beliefmodel/model.hpp"

namespace nbf::beliefmodel {

/// Draws `n` codes (n x state_dim) from one freshly chosen target belief.
using DistributionSource = std::function<Matrix(numkit::RngStream& rng, int n)>;
using TrainProgress = std::function<void(int step, double loss)>;

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int step)
      : std::runtime_error("loss is not finite at training step " + std::to_string(step)), step_(step) {}
  [[nodiscard]] int step() const noexcept { return step_; }

 private:
  int step_;
};

struct TrainResult {
  BeliefModel model;
  std::vector<double> losses;  // one entry per optimizer step
};

/// The model initialized from `train.seed`, as train() starts from it.
BeliefModel initial_model(const ModelConfig& model, const TrainConfig& train);

/// Deterministic for a given seed. `progress` (optional) is called after
/// every step.
TrainResult train(const ModelConfig& model, const DistributionSource& source, const TrainConfig& train,
                  const TrainProgress& progress = {});

}  // namespace nbf::beliefmodel
