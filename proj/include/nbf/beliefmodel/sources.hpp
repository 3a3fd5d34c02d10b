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

// Target beliefs for training: exact posteriors, reference-filter particle
// sets, and direct Donut draws.

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "nbf/beliefmodel/codec.hpp"
#include "nbf/beliefmodel/train.hpp"
#include "nbf/envs/donuts.hpp"
#include "nbf/oracle/exact.hpp"

namespace nbf::beliefmodel {

DistributionSource donut_source();

/// Each draw builds a fresh environment instance, simulates a trajectory to
/// a uniformly random depth in [0, min(max_depth, horizon(env))] and samples
/// from the exact posterior there.
template <envs::DiscreteEnv Env>
DistributionSource exact_belief_source(std::function<Env(numkit::RngStream&)> make_env, int max_depth,
                                       std::function<int(const Env&)> horizon = {}) {
  return [make_env = std::move(make_env), max_depth, horizon = std::move(horizon)](numkit::RngStream& rng, int n) {
    const Env env = make_env(rng);
    const int limit = horizon ? std::min(max_depth, horizon(env)) : max_depth;
    const int depth = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(limit) + 1));
    auto truth = env.sample_initial(rng);
    auto belief = oracle::exact_init(env);
    for (int t = 0; t < depth; ++t) {
      const auto tr = env.step(truth, rng);
      truth = tr.next;
      belief = oracle::exact_update(env, belief, tr.obs);
    }
    const auto states = belief.sample(static_cast<std::size_t>(n), rng);
    return encode_states(env, std::span<const typename Env::State>(states));
  };
}

/// Equally weighted particle sets taken from reference-filter runs.
struct ParticlePool {
  std::vector<Matrix> sets;
};

/// Runs `episodes` reference filters of `steps` steps and keeps `kept`
/// resampled particles of every step (including the initial set).
template <envs::FilterEnv Env>
ParticlePool build_reference_pool(const std::function<Env(numkit::RngStream&)>& make_env, int episodes, int steps,
                                  int kept, std::uint64_t seed, int reference_particles = 1024) {
  ParticlePool pool;
  const numkit::RngStream root(seed, 0x504f4f4c);  // "POOL"
  for (int e = 0; e < episodes; ++e) {
    numkit::RngStream rng = root.split(static_cast<std::uint64_t>(e));
    const Env env = make_env(rng);
    auto truth = env.sample_initial(rng);
    std::vector<typename Env::Obs> obs;
    for (int t = 0; t < steps; ++t) {
      auto tr = env.step(truth, rng);
      truth = tr.next;
      obs.push_back(std::move(tr.obs));
    }
    const auto trace = oracle::reference_filter(env, obs, rng.next_u64(), reference_particles);
    for (const auto& ps : trace) {
      const auto w = ps.weights();
      std::vector<double> cdf(w.size());
      std::partial_sum(w.begin(), w.end(), cdf.begin());
      std::vector<typename Env::State> picked;
      picked.reserve(static_cast<std::size_t>(kept));
      for (int k = 0; k < kept; ++k) {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * cdf.back());
        if (it == cdf.end()) --it;
        picked.push_back(ps.states[static_cast<std::size_t>(it - cdf.begin())]);
      }
      pool.sets.push_back(encode_states(env, std::span<const typename Env::State>(picked)));
    }
  }
  return pool;
}

DistributionSource pool_source(std::shared_ptr<const ParticlePool> pool);

}  // namespace nbf::beliefmodel
