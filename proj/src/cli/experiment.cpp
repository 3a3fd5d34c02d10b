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

#include "nbf/cli/experiment.hpp"

#include <memory>

#include "nbf/beliefmodel/sources.hpp"
#include "nbf/cli/run_config.hpp"

namespace nbf::cli {

namespace {

envs::Gridworld draw_grid(const GridEnvConfig& g, numkit::RngStream& rng) {
  envs::GridSpec spec = envs::random_grid(g.dim, g.size, g.obstacles, g.obstacle_width, g.obs_flip_prob, rng);
  spec.observe_direction = g.observe_direction;
  spec.direction_error = g.direction_error;
  spec.validate();
  envs::GridPolicy policy = envs::random_policy(spec, g.temperature, rng);
  return {std::move(spec), policy};
}

envs::TriSpec tri_spec(const TriEnvConfig& t) {
  envs::TriSpec spec;
  spec.sigma_move = t.sigma_move;
  spec.sigma_scan = t.sigma_scan;
  spec.episode_length = t.episode_length;
  spec.validate();
  return spec;
}

}  // namespace

Experiment::Experiment(const EnvConfig& config) : config_(config), random_(config.condition == Condition::kRandom) {
  if (config.kind == EnvKind::kDonuts) {
    state_dim_ = 2;
    return;
  }
  numkit::RngStream layout(config.layout_seed, 0x4c41594f);  // "LAYO"
  fixed_ = draw(layout);
  state_dim_ = std::visit([](const auto& env) { return env.state_dim(); }, *fixed_);
}

AnyEnv Experiment::draw(numkit::RngStream& rng) const {
  switch (config_.kind) {
    case EnvKind::kGrid:
      return draw_grid(config_.grid, rng);
    case EnvKind::kGoofspiel: {
      const GoofEnvConfig& k = config_.goofspiel;
      return envs::Goofspiel(envs::random_goof_spec(k.k, k.own_beta, k.opp_beta, k.hidden_opponent_hand, rng));
    }
    case EnvKind::kTriangulation: {
      const TriEnvConfig& t = config_.triangulation;
      return envs::Triangulation(tri_spec(t), envs::random_tri_policy(rng, t.scan_prob_low, t.scan_prob_high));
    }
    case EnvKind::kDonuts:
      break;
  }
  throw std::invalid_argument("donuts have no filtering environment");
}

AnyEnv Experiment::instance(numkit::RngStream& rng) const {
  if (!fixed_) throw std::invalid_argument("donuts have no filtering environment");
  return random_ ? draw(rng) : *fixed_;
}

beliefmodel::DistributionSource training_source(const RunConfig& config) {
  auto exp = std::make_shared<const Experiment>(config.env);
  switch (config.env.kind) {
    case EnvKind::kDonuts:
      return beliefmodel::donut_source();
    case EnvKind::kGrid:
      return beliefmodel::exact_belief_source<envs::Gridworld>(
          [exp](numkit::RngStream& rng) { return exp->make<envs::Gridworld>(rng); }, config.train.max_depth);
    case EnvKind::kGoofspiel:
      return beliefmodel::exact_belief_source<envs::Goofspiel>(
          [exp](numkit::RngStream& rng) { return exp->make<envs::Goofspiel>(rng); }, config.train.max_depth,
          [](const envs::Goofspiel& env) { return env.spec().rounds(); });
    case EnvKind::kTriangulation: {
      auto pool = std::make_shared<const beliefmodel::ParticlePool>(beliefmodel::build_reference_pool<envs::Triangulation>(
          [exp](numkit::RngStream& rng) { return exp->make<envs::Triangulation>(rng); }, config.train.pool_episodes,
          config.train.max_depth, config.train.config.samples_per_distribution, config.train.config.seed,
          config.eval.reference_particles));
      return beliefmodel::pool_source(std::move(pool));
    }
  }
  throw std::logic_error("unhandled env kind");
}

}  // namespace nbf::cli
