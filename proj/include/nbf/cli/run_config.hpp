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
#include <string>
#include <string_view>
#include <vector>

#include "nbf/beliefmodel/config.hpp"
#include "nbf/evalharness/episode.hpp"

namespace YAML {
class Node;
}

namespace nbf::cli {

using beliefmodel::ConfigError;

enum class EnvKind { kGrid, kGoofspiel, kTriangulation, kDonuts };
enum class Condition { kFixed, kRandom };

std::string_view to_string(EnvKind kind);
std::string_view to_string(Condition condition);

struct GridEnvConfig {
  int dim = 2;
  int size = 5;
  double obs_flip_prob = 0.0;
  double temperature = 1e-5;
  // Obstacle cubes and their width; 0 picks the table value for sizes 5 and 8.
  int obstacles = 0;
  int obstacle_width = 0;
  bool observe_direction = false;
  double direction_error = 0.1;
  bool operator==(const GridEnvConfig&) const = default;
};

struct GoofEnvConfig {
  int k = 4;
  double own_beta = 1.0;
  double opp_beta = 1.0;
  bool hidden_opponent_hand = true;
  bool operator==(const GoofEnvConfig&) const = default;
};

struct TriEnvConfig {
  double sigma_move = 0.1;
  double sigma_scan = 0.25;
  int episode_length = 20;
  double scan_prob_low = 0.25;
  double scan_prob_high = 0.75;
  bool operator==(const TriEnvConfig&) const = default;
};

/// `fixed`: one instance (grid layout and policy, deal, or policy) drawn
/// from layout_seed and reused by every episode. `random`: a fresh instance
/// per episode and per training distribution.
struct EnvConfig {
  EnvKind kind = EnvKind::kGrid;
  Condition condition = Condition::kFixed;
  std::uint64_t layout_seed = 0;
  GridEnvConfig grid;
  GoofEnvConfig goofspiel;
  TriEnvConfig triangulation;
  bool operator==(const EnvConfig&) const = default;
};

struct TrainSection {
  beliefmodel::TrainConfig config;
  // Deepest belief a training distribution is drawn from (discrete envs).
  int max_depth = 20;
  // Reference-filter episodes behind the Triangulation training pool.
  int pool_episodes = 500;
  bool operator==(const TrainSection&) const = default;
};

struct EvalSection {
  std::vector<evalharness::FilterSpec> roster;
  int episodes = 500;
  int steps = 20;
  std::uint64_t seed = 0;
  int model_samples = 4096;
  int reference_particles = 1024;
  int grid_cells = 20;
  int retry_limit = nbfilter::kDefaultRetryLimit;
  bool operator==(const EvalSection&) const = default;
};

struct BenchSection {
  std::vector<evalharness::FilterSpec> roster;
  int reps = 10000;
  int steps = 20;
  std::uint64_t seed = 0;
  bool operator==(const BenchSection&) const = default;
};

/// Fully resolved run description. Defaults depend on env.kind.
struct RunConfig {
  EnvConfig env;
  beliefmodel::ModelConfig model;
  TrainSection train;
  EvalSection eval;
  BenchSection bench;
  bool operator==(const RunConfig&) const = default;
};

/// Defaults for one environment kind.
RunConfig default_run_config(EnvKind kind);

/// Throws ConfigError (with a line number when known) on syntax errors,
/// unknown keys, bad values or inconsistent sections.
RunConfig parse_run_config(std::string_view yaml_text);
RunConfig run_config_from_yaml(const YAML::Node& root);
RunConfig load_run_config(const std::string& path);

/// Every field spelled out; parse_run_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

/// Recomputes derived fields (model state_dim, uniform-prior box, steps)
/// and validates. Called by the parsers.
void resolve(RunConfig& config);

}  // namespace nbf::cli
