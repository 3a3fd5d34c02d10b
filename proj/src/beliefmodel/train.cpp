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

#include "nbf/beliefmodel/train.hpp"

#include <cmath>

namespace nbf::beliefmodel {

namespace {
constexpr std::uint64_t kInitStream = 0x494e4954;  // "INIT"
constexpr std::uint64_t kStepStream = 0x53544550;  // "STEP"
}  // namespace

BeliefModel initial_model(const ModelConfig& model, const TrainConfig& train) {
  numkit::RngStream rng(train.seed, kInitStream);
  return init_model(model, rng);
}

TrainResult train(const ModelConfig& model_config, const DistributionSource& source, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  TrainResult result{initial_model(model_config, cfg), {}};
  BeliefModel& model = result.model;
  numkit::OptState opt = numkit::make_opt_state(cfg.optimizer, cfg.learning_rate, model.params);
  const numkit::RngStream steps(cfg.seed, kStepStream);
  result.losses.reserve(static_cast<std::size_t>(cfg.training_steps));
  for (int step = 0; step < cfg.training_steps; ++step) {
    const numkit::RngStream step_rng = steps.split(static_cast<std::uint64_t>(step));
    std::vector<Matrix> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int k = 0; k < cfg.batch_size; ++k) {
      numkit::RngStream draw = step_rng.split(static_cast<std::uint64_t>(k) + 1);
      Matrix codes = source(draw, cfg.samples_per_distribution);
      if (codes.rows() != cfg.samples_per_distribution || codes.cols() != model.state_dim()) {
        throw std::runtime_error("distribution source returned a " + std::to_string(codes.rows()) + "x" +
                                 std::to_string(codes.cols()) + " sample matrix");
      }
      batch.push_back(std::move(codes));
    }
    numkit::RngStream noise = step_rng.split(0);
    const auto vg = numkit::value_and_grad(
        [&](numkit::Tape&, const ParamVars& pv) { return nll_loss(model, pv, batch, noise); }, model.params);
    if (!std::isfinite(vg.value)) throw TrainingDiverged(step);
    try {
      numkit::optimizer_step_inplace(opt, model.params, vg.grads);
    } catch (const std::invalid_argument&) {
      throw TrainingDiverged(step);
    }
    result.losses.push_back(vg.value);
    if (progress) progress(step, vg.value);
  }
  return result;
}

}  // namespace nbf::beliefmodel
