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

#include <concepts>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "nbf/numkit/rng.hpp"

namespace nbf::envs {

using numkit::RngStream;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// One ground-truth step: the next hidden state and what the observer sees.
template <typename State, typename Obs>
struct Transition {
  State next;
  Obs obs;
};

/// A simulated particle move together with log H(x, x')[y].
template <typename State>
struct Propagated {
  State next;
  double log_weight = 0.0;
};

/// A state recovered from a real vector, with a flag telling whether it had
/// to be moved onto the legal lattice.
template <typename State>
struct Decoded {
  State state;
  bool clamped = false;
};

/// An environment instance together with its control (the (G, pi) pair).
///
/// `propagate` draws x' ~ T(x, pi) and returns log H(x, x')[y]. Parts of the
/// step that are public (revealed in `y` itself, such as a Goofspiel prize
/// card) may be taken from `y` directly; their probability is folded into
/// the returned weight so that sum over x' of T * H is preserved.
///
/// `encode` / `decode` map states to the real vectors a belief model works
/// on. `decode` takes an anchor state carrying the public components that
/// every particle at the current step shares.
template <typename E>
concept FilterEnv = requires(const E& env, const typename E::State& s, const typename E::Obs& y,
                             RngStream& rng, std::span<const double> code,
                             std::span<double> out) {
  typename E::State;
  typename E::Obs;
  { E::kDiscrete } -> std::convertible_to<bool>;
  { env.sample_initial(rng) } -> std::same_as<typename E::State>;
  { env.step(s, rng) } -> std::same_as<Transition<typename E::State, typename E::Obs>>;
  { env.propagate(s, y, rng) } -> std::same_as<Propagated<typename E::State>>;
  { env.state_dim() } -> std::convertible_to<int>;
  env.encode(s, out);
  { env.decode(code, s) } -> std::same_as<Decoded<typename E::State>>;
};

/// Environments whose reachable states can be enumerated exactly.
template <typename E>
concept DiscreteEnv =
    FilterEnv<E> && E::kDiscrete &&
    requires(const E& env, const typename E::State& s, const typename E::Obs& y) {
      { env.initial_distribution() } -> std::same_as<std::vector<std::pair<typename E::State, double>>>;
      /// (x', T(x, pi)[x'] * H(x, x')[y]) for every x' with positive mass.
      { env.successors(s, y) } -> std::same_as<std::vector<std::pair<typename E::State, double>>>;
    };

template <FilterEnv E>
std::vector<double> encode(const E& env, const typename E::State& s) {
  std::vector<double> out(static_cast<std::size_t>(env.state_dim()));
  env.encode(s, out);
  return out;
}

}  // namespace nbf::envs
