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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbf/beliefmodel/codec.hpp"
#include "nbf/beliefmodel/model.hpp"
#include "nbf/envs/env.hpp"
#include "nbf/numkit/rng.hpp"
#include "nbf/pfilter/particle_filter.hpp"

namespace nbf::nbfilter {

using beliefmodel::StateSamples;
using numkit::RngStream;

inline constexpr int kDefaultRetryLimit = 8;

/// Every regenerated particle set got zero likelihood at `step`, even after
/// the allowed retries.
class ImpoverishedUpdate : public std::runtime_error {
 public:
  explicit ImpoverishedUpdate(int step)
      : std::runtime_error("impoverished update at step " + std::to_string(step)), step_(step) {}
  [[nodiscard]] int step() const noexcept { return step_; }

 private:
  int step_;
};

/// What the filter needs from a belief representation: draw states from a
/// belief and summarize weighted states into a new one. `step` is the index
/// of the belief being embedded; learned models ignore it.
template <typename M, typename Env>
concept BeliefRepresentation =
    envs::FilterEnv<Env> &&
    requires(const M& m, const Env& env, const typename M::Theta& theta, const typename Env::State& anchor,
             std::span<const typename Env::State> states, std::span<const double> weights, RngStream& rng) {
      typename M::Theta;
      { m.sample(env, theta, 1, anchor, rng) } -> std::same_as<StateSamples<typename Env::State>>;
      { m.embed(env, states, weights, 0) } -> std::same_as<typename M::Theta>;
    };

/// A trained BeliefModel as a belief representation.
class NeuralBelief {
 public:
  using Theta = beliefmodel::Embedding;

  explicit NeuralBelief(const beliefmodel::BeliefModel& model) : model_(&model) {}

  template <envs::FilterEnv Env>
  StateSamples<typename Env::State> sample(const Env& env, const Theta& theta, int n,
                                           const typename Env::State& anchor, RngStream& rng) const {
    return beliefmodel::sample_states(*model_, env, theta, n, anchor, rng);
  }

  template <envs::FilterEnv Env>
  Theta embed(const Env& env, std::span<const typename Env::State> states, std::span<const double> weights,
              int /*step*/) const {
    return beliefmodel::embed_states(*model_, env, states, weights);
  }

  [[nodiscard]] const beliefmodel::BeliefModel& model() const noexcept { return *model_; }

 private:
  const beliefmodel::BeliefModel* model_;
};

template <typename Theta, typename State>
struct NbfState {
  Theta theta;
  int n_particles = 0;
  int step = 0;
  int retry_limit = kDefaultRetryLimit;
  // Any state consistent with the observations so far; carries the public
  // components the state codec needs when decoding model samples.
  State anchor;
};

template <typename Theta, typename State>
struct NbfUpdate {
  NbfState<Theta, State> state;
  std::optional<double> estimate;
  double clamp_rate = 0.0;  // fraction of generated particles moved onto the lattice
  int retries = 0;
};

template <typename State>
using TestFn = std::function<double(const State&)>;

template <typename M, typename Env>
  requires BeliefRepresentation<M, Env>
NbfState<typename M::Theta, typename Env::State> nbf_init(const M& model, const Env& env, int n, RngStream& rng,
                                                          int retry_limit = kDefaultRetryLimit) {
  if (n < 1) throw std::invalid_argument("nbf_init: need at least one particle");
  if (retry_limit < 0) throw std::invalid_argument("nbf_init: retry_limit must be >= 0");
  std::vector<typename Env::State> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs.push_back(env.sample_initial(rng));
  const std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  auto theta = model.embed(env, std::span<const typename Env::State>(xs), w, 0);
  return {std::move(theta), n, 0, retry_limit, xs.front()};
}

/// One posterior update in embedding space: generate particles from theta,
/// simulate them through the step, weight by the observation likelihood,
/// optionally estimate E[test_fn], and embed the weighted particles.
template <typename M, typename Env>
  requires BeliefRepresentation<M, Env>
NbfUpdate<typename M::Theta, typename Env::State> nbf_update(
    const M& model, const NbfState<typename M::Theta, typename Env::State>& state, const typename Env::Obs& obs,
    const Env& env, RngStream& rng, const TestFn<typename Env::State>& test_fn = {}) {
  using State = typename Env::State;
  const int next_step = state.step + 1;
  const auto n = static_cast<std::size_t>(state.n_particles);
  std::vector<State> moved;
  std::vector<double> log_w;
  double clamp_rate = 0.0;
  int attempt = 0;
  for (;; ++attempt) {
    if (attempt > state.retry_limit) throw ImpoverishedUpdate(next_step);
    const StateSamples<State> drawn = model.sample(env, state.theta, state.n_particles, state.anchor, rng);
    clamp_rate = drawn.clamp_rate();
    moved.clear();
    log_w.clear();
    moved.reserve(n);
    log_w.reserve(n);
    bool any = false;
    for (const State& x : drawn.states) {
      auto p = env.propagate(x, obs, rng);
      any = any || p.log_weight > envs::kLogZero;
      moved.push_back(std::move(p.next));
      log_w.push_back(p.log_weight);
    }
    if (any) break;
  }

  NbfUpdate<typename M::Theta, State> out;
  out.retries = attempt;
  out.clamp_rate = clamp_rate;
  if (test_fn) {
    std::vector<double> values;
    values.reserve(n);
    for (const State& x : moved) values.push_back(test_fn(x));
    out.estimate = pfilter::self_normalized_estimate(log_w, values);
  }
  if (!pfilter::normalize_log_weights(log_w)) throw ImpoverishedUpdate(next_step);
  std::vector<double> w(n);
  std::size_t anchor = n;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(log_w[i]);
    if (anchor == n && w[i] > 0.0) anchor = i;
  }
  if (anchor == n) throw ImpoverishedUpdate(next_step);
  out.state.theta = model.embed(env, std::span<const State>(moved), w, next_step);
  out.state.n_particles = state.n_particles;
  out.state.step = next_step;
  out.state.retry_limit = state.retry_limit;
  out.state.anchor = moved[anchor];
  return out;
}

/// Folds nbf_update over an observation sequence. Element 0 is the initial
/// state. Deterministic for a given seed.
template <typename M, typename Env>
  requires BeliefRepresentation<M, Env>
std::vector<NbfState<typename M::Theta, typename Env::State>> nbf_run(const M& model, const Env& env,
                                                                      const std::vector<typename Env::Obs>& obs,
                                                                      int n, std::uint64_t seed,
                                                                      int retry_limit = kDefaultRetryLimit) {
  RngStream rng(seed, 0x4e4246);  // "NBF"
  std::vector<NbfState<typename M::Theta, typename Env::State>> trace;
  trace.reserve(obs.size() + 1);
  trace.push_back(nbf_init(model, env, n, rng, retry_limit));
  for (const auto& y : obs) trace.push_back(nbf_update(model, trace.back(), y, env, rng).state);
  return trace;
}

}  // namespace nbf::nbfilter
