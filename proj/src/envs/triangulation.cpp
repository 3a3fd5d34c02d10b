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

#include "nbf/envs/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nbf::envs {

void TriSpec::validate() const {
  if (!(half_width > 0.0)) throw std::invalid_argument("triangulation half_width must be positive");
  if (!(step_size >= 0.0)) throw std::invalid_argument("triangulation step_size must be non-negative");
  if (!(sigma_move > 0.0)) throw std::invalid_argument("triangulation sigma_move must be positive");
  if (!(sigma_scan > 0.0)) throw std::invalid_argument("triangulation sigma_scan must be positive");
  if (episode_length < 1) throw std::invalid_argument("triangulation episode_length must be positive");
}

TriStepResult tri_step(const TriSpec& spec, const TriState& state, TriAction action, RngStream& rng) {
  TriStepResult r;
  r.next = state;
  r.next.phase = (state.phase + 1) % 3;
  const double h = spec.half_width;
  switch (action) {
    case TriAction::kRight:
    case TriAction::kLeft:
    case TriAction::kUp:
    case TriAction::kDown: {
      const auto a = static_cast<int>(action);
      const double sign = (a % 2 == 0) ? 1.0 : -1.0;
      double dx = a < 2 ? sign * spec.step_size : 0.0;
      double dy = a >= 2 ? sign * spec.step_size : 0.0;
      if (spec.sigma_move > 0.0) {
        dx += spec.sigma_move * rng.normal();
        dy += spec.sigma_move * rng.normal();
      }
      r.next.x = std::clamp(state.x + dx, -h, h);
      r.next.y = std::clamp(state.y + dy, -h, h);
      break;
    }
    case TriAction::kScan: {
      const auto& b = spec.beacons[static_cast<std::size_t>(r.next.phase)];
      double range = std::hypot(r.next.x - b[0], r.next.y - b[1]);
      if (spec.sigma_scan > 0.0) range += spec.sigma_scan * rng.normal();
      r.obs.range = range;
      break;
    }
    case TriAction::kStop:
      r.terminated = true;
      break;
  }
  return r;
}

double tri_obs_logdensity(const TriSpec& spec, const TriState& next, double range) {
  const auto& b = spec.beacons[static_cast<std::size_t>(next.phase)];
  const double z = (range - std::hypot(next.x - b[0], next.y - b[1])) / spec.sigma_scan;
  return -0.5 * z * z - std::log(spec.sigma_scan * std::sqrt(2.0 * std::numbers::pi));
}

TriPolicy random_tri_policy(RngStream& rng, double scan_lo, double scan_hi) {
  TriPolicy p;
  p.direction = static_cast<TriAction>(rng.uniform_int(4));
  p.scan_prob = rng.uniform(scan_lo, scan_hi);
  return p;
}

Triangulation::Triangulation(TriSpec spec, TriPolicy policy) : spec_(spec), policy_(policy) {
  spec_.validate();
  if (!(policy_.scan_prob >= 0.0 && policy_.scan_prob <= 1.0)) {
    throw std::invalid_argument("triangulation scan_prob must lie in [0, 1]");
  }
  if (static_cast<int>(policy_.direction) > 3) {
    throw std::invalid_argument("triangulation policy direction must be a cardinal move");
  }
}

Triangulation::State Triangulation::sample_initial(RngStream& rng) const {
  State s;
  s.x = rng.uniform(-spec_.half_width, spec_.half_width);
  s.y = rng.uniform(-spec_.half_width, spec_.half_width);
  return s;
}

Transition<Triangulation::State, Triangulation::Obs> Triangulation::step(const State& s, RngStream& rng) const {
  const TriAction a = rng.uniform() < policy_.scan_prob ? TriAction::kScan : policy_.direction;
  const TriStepResult r = tri_step(spec_, s, a, rng);
  return {r.next, r.obs};
}

Propagated<Triangulation::State> Triangulation::propagate(const State& s, const Obs& y, RngStream& rng) const {
  if (y.range) {
    TriState next = s;
    next.phase = (s.phase + 1) % 3;
    return {next, tri_obs_logdensity(spec_, next, *y.range)};
  }
  return {tri_step(spec_, s, policy_.direction, rng).next, 0.0};
}

void Triangulation::encode(const State& s, std::span<double> out) const {
  out[0] = s.x;
  out[1] = s.y;
}

Decoded<Triangulation::State> Triangulation::decode(std::span<const double> code, const State& anchor) const {
  Decoded<State> d;
  d.state.phase = anchor.phase;
  const double h = spec_.half_width;
  double v[2];
  for (std::size_t i = 0; i < 2; ++i) {
    v[i] = std::isfinite(code[i]) ? code[i] : 0.0;
    if (!std::isfinite(code[i]) || v[i] < -h || v[i] > h) d.clamped = true;
    v[i] = std::clamp(v[i], -h, h);
  }
  d.state.x = v[0];
  d.state.y = v[1];
  return d;
}

}  // namespace nbf::envs
