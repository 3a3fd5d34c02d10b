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

#include <array>
#include <compare>
#include <span>
#include <string>
#include <vector>

#include "nbf/envs/env.hpp"

namespace nbf::envs {

using GridCell = std::array<int, 3>;

/// Axis-aligned cube of blocked cells: corner[i] <= c[i] < corner[i] + width.
struct Obstacle {
  GridCell corner{};
  int width = 1;
  bool operator==(const Obstacle&) const = default;
};

struct GridSpec {
  int dim = 2;
  int side = 5;
  std::vector<Obstacle> obstacles;
  /// Probability that the reported wall-hit flag is flipped.
  double obs_flip_prob = 0.0;
  /// Optional second observation channel: the executed action, reported
  /// correctly with probability 1 - direction_error and otherwise replaced by
  /// a uniformly chosen different action.
  bool observe_direction = false;
  double direction_error = 0.1;

  /// Throws std::invalid_argument for out-of-range fields, obstacles outside
  /// the grid, no free cell, or a disconnected free region.
  void validate() const;
  [[nodiscard]] int num_actions() const noexcept { return 2 * dim; }
  [[nodiscard]] int num_cells() const noexcept;
  [[nodiscard]] bool in_bounds(const GridCell& c) const noexcept;
  [[nodiscard]] bool blocked(const GridCell& c) const noexcept;
  [[nodiscard]] bool is_free(const GridCell& c) const noexcept { return in_bounds(c) && !blocked(c); }
  [[nodiscard]] std::vector<GridCell> free_cells() const;
  [[nodiscard]] bool free_region_connected() const;
  [[nodiscard]] int cell_index(const GridCell& c) const noexcept;
  [[nodiscard]] GridCell cell_at(int index) const noexcept;
};

struct GridState {
  GridCell cell{};
  auto operator<=>(const GridState&) const = default;
};

struct GridPolicy {
  GridCell goal{};
  double temperature = 1e-5;
  /// When >= 0 the policy always takes this action (goal is ignored).
  int fixed_action = -1;
};

struct GridObs {
  bool hit_wall = false;
  /// Reported action, or -1 when the direction channel is off.
  int direction = -1;
  bool operator==(const GridObs&) const = default;
};

/// Action a moves along axis a / 2, towards +1 for even a and -1 for odd a.
/// In 2-D: 0 right, 1 left, 2 up, 3 down.
[[nodiscard]] GridCell intended_next(const GridCell& c, int action) noexcept;
[[nodiscard]] int manhattan(const GridCell& a, const GridCell& b, int dim) noexcept;

/// Softmax over actions of -manhattan(intended_next(s, a), goal) / temperature.
/// An infinite temperature gives the uniform distribution; a fixed action
/// gives a point mass.
std::vector<double> grid_policy_probs(const GridSpec& spec, const GridPolicy& policy,
                                      const GridState& s);

struct GridStepResult {
  GridState next;
  GridObs obs;
  int action = 0;
};

GridStepResult grid_step(const GridSpec& spec, const GridPolicy& policy, const GridState& s,
                         RngStream& rng);

/// One entry of the exact one-step law. Entries for different actions that
/// reach the same cell with the same emission law are merged (action = -1).
struct GridSuccessor {
  GridState next;
  double prob = 0.0;
  /// P(hit_wall flag reported as true).
  double p_hit = 0.0;
  int action = -1;
};

std::vector<GridSuccessor> grid_transition_support(const GridSpec& spec, const GridPolicy& policy,
                                                   const GridState& s);

/// H(x, x')[obs] for one support entry.
double grid_emission_prob(const GridSpec& spec, const GridSuccessor& succ, const GridObs& obs);

/// Obstacle corners drawn uniformly (rejection-sampled until the free cells
/// are connected).
GridSpec random_grid(int dim, int side, int num_obstacles, int width, double obs_flip_prob,
                     RngStream& rng);
GridPolicy random_policy(const GridSpec& spec, double temperature, RngStream& rng);

/// The Gridworld (G, pi) pair. Per-cell policy and successor tables are
/// precomputed at construction.
class Gridworld {
 public:
  using State = GridState;
  using Obs = GridObs;
  static constexpr bool kDiscrete = true;

  Gridworld(GridSpec spec, GridPolicy policy);

  [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const GridPolicy& policy() const noexcept { return policy_; }

  State sample_initial(RngStream& rng) const;
  Transition<State, Obs> step(const State& s, RngStream& rng) const;
  Propagated<State> propagate(const State& s, const Obs& y, RngStream& rng) const;
  [[nodiscard]] int state_dim() const noexcept { return spec_.dim; }
  void encode(const State& s, std::span<double> out) const;
  /// Floors each coordinate; out-of-grid or blocked results move to the
  /// nearest free cell centre and are flagged.
  Decoded<State> decode(std::span<const double> code, const State& anchor) const;

  std::vector<std::pair<State, double>> initial_distribution() const;
  std::vector<std::pair<State, double>> successors(const State& s, const Obs& y) const;

  [[nodiscard]] std::span<const double> action_probs(const State& s) const;
  [[nodiscard]] const std::vector<GridState>& free_states() const noexcept { return free_; }

 private:
  struct CellTable {
    std::vector<double> probs;
    std::vector<GridState> next;
    std::vector<bool> hit;
  };

  const CellTable& table(const State& s) const;
  double emission(bool hit, int action, const Obs& y) const;

  GridSpec spec_;
  GridPolicy policy_;
  std::vector<GridState> free_;
  std::vector<int> table_index_;  // cell index -> position in tables_, -1 if blocked
  std::vector<CellTable> tables_;
};

}  // namespace nbf::envs
