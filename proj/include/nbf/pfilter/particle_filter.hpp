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

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbf/envs/env.hpp"
#include "nbf/numkit/rng.hpp"

namespace nbf::pfilter {

using numkit::RngStream;

/// Every particle received zero likelihood for the observation at `step`.
class ParticleImpoverishment : public std::runtime_error {
 public:
  explicit ParticleImpoverishment(int step)
      : std::runtime_error("particle impoverishment: all weights are zero at step " + std::to_string(step)),
        step_(step) {}
  [[nodiscard]] int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Weighted particles. Weights are kept as normalized log-weights
/// (logsumexp == 0).
template <typename State>
struct ParticleSet {
  std::vector<State> states;
  std::vector<double> log_weights;

  [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
  [[nodiscard]] std::vector<double> weights() const {
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
    return w;
  }
};

/// (sum w)^2 / sum w^2. Throws on all-zero or negative weights.
double ess(std::span<const double> weights);

/// Systematic resampling index walk with offset u in [0, 1/n).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);

/// Shifts log-weights so that they sum to one in probability space. Returns
/// false when every weight is zero (or NaN).
bool normalize_log_weights(std::vector<double>& log_weights);

/// sum_i w_i f_i / sum_i w_i for w_i = exp(log_weights[i]), computed after
/// log-space normalization. Throws std::invalid_argument if every weight is
/// zero.
double self_normalized_estimate(std::span<const double> log_weights, std::span<const double> values);

template <typename State, typename Fn>
double pf_estimate(const ParticleSet<State>& ps, Fn&& test_fn) {
  std::vector<double> values;
  values.reserve(ps.size());
  for (const State& s : ps.states) values.push_back(test_fn(s));
  return self_normalized_estimate(ps.log_weights, values);
}

template <typename State>
ParticleSet<State> systematic_resample(const ParticleSet<State>& ps, RngStream& rng) {
  const std::size_t n = ps.size();
  const std::vector<std::size_t> idx = systematic_indices(ps.weights(), rng.uniform() / static_cast<double>(n));
  ParticleSet<State> out;
  out.states.reserve(n);
  for (std::size_t i : idx) out.states.push_back(ps.states[i]);
  out.log_weights.assign(n, -std::log(static_cast<double>(n)));
  return out;
}

template <envs::FilterEnv E>
ParticleSet<typename E::State> pf_init(const E& env, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("pf_init: n must be at least 1");
  ParticleSet<typename E::State> ps;
  ps.states.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ps.states.push_back(env.sample_initial(rng));
  ps.log_weights.assign(static_cast<std::size_t>(n), -std::log(static_cast<double>(n)));
  return ps;
}

/// One SIR step: simulate, reweight by H, resample systematically when the
/// effective sample size falls below n / 2. `step` only labels errors.
template <envs::FilterEnv E>
ParticleSet<typename E::State> pf_update(const E& env, const ParticleSet<typename E::State>& ps,
                                         const typename E::Obs& obs, RngStream& rng, int step = -1) {
  ParticleSet<typename E::State> out;
  const std::size_t n = ps.size();
  if (n == 0) throw std::invalid_argument("pf_update: empty particle set");
  out.states.reserve(n);
  out.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    envs::Propagated<typename E::State> p = env.propagate(ps.states[i], obs, rng);
    out.states.push_back(std::move(p.next));
    out.log_weights[i] = ps.log_weights[i] + p.log_weight;
  }
  if (!normalize_log_weights(out.log_weights)) throw ParticleImpoverishment(step);
  if (ess(out.weights()) < 0.5 * static_cast<double>(n)) return systematic_resample(out, rng);
  return out;
}

}  // namespace nbf::pfilter
