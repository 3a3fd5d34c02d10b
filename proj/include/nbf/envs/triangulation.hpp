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
#include <optional>
#include <span>

#include "nbf/envs/env.hpp"

namespace nbf::envs {

struct TriSpec {
  double half_width = 5.0;
  double step_size = 0.5;
  std::array<std::array<double, 2>, 3> beacons{{{-2.0, -2.0}, {0.0, 2.8284271247461903}, {2.0, -2.0}}};
  double sigma_move = 0.1;
  double sigma_scan = 0.25;
  int episode_length = 20;

  void validate() const;
};

enum class TriAction { kRight = 0, kLeft = 1, kUp = 2, kDown = 3, kScan = 4, kStop = 5 };

/// `phase` is the active beacon index. A step first advances the phase and
/// then, for a scan, measures the range to the newly active beacon, so the
/// observation depends on the successor state alone.
struct TriState {
  double x = 0.0;
  double y = 0.0;
  int phase = 0;
  auto operator<=>(const TriState&) const = default;
};

struct TriPolicy {
  TriAction direction = TriAction::kRight;
  double scan_prob = 0.5;
};

/// A scan yields a range; every other action yields nothing.
struct TriObs {
  std::optional<double> range;
  bool operator==(const TriObs&) const = default;
};

struct TriStepResult {
  TriState next;
  TriObs obs;
  bool terminated = false;
};

TriStepResult tri_step(const TriSpec& spec, const TriState& state, TriAction action, RngStream& rng);

/// Gaussian log-density of a range reading given the successor state.
double tri_obs_logdensity(const TriSpec& spec, const TriState& next, double range);

TriPolicy random_tri_policy(RngStream& rng, double scan_lo = 0.25, double scan_hi = 0.75);

class Triangulation {
 public:
  using State = TriState;
  using Obs = TriObs;
  static constexpr bool kDiscrete = false;

  Triangulation(TriSpec spec, TriPolicy policy);

  [[nodiscard]] const TriSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const TriPolicy& policy() const noexcept { return policy_; }

  State sample_initial(RngStream& rng) const;
  Transition<State, Obs> step(const State& s, RngStream& rng) const;
  /// The observation type reveals whether the agent scanned, so the move is
  /// taken from it; non-scan steps carry weight 1.
  Propagated<State> propagate(const State& s, const Obs& y, RngStream& rng) const;
  [[nodiscard]] int state_dim() const noexcept { return 2; }
  void encode(const State& s, std::span<double> out) const;
  /// Clamps the position into the arena; the phase comes from the anchor.
  Decoded<State> decode(std::span<const double> code, const State& anchor) const;

 private:
  TriSpec spec_;
  TriPolicy policy_;
};

}  // namespace nbf::envs
