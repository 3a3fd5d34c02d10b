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
#include <cstdint>
#include <cstring>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "nbf/beliefmodel/codec.hpp"
#include "nbf/envs/goofspiel.hpp"
#include "nbf/envs/gridworld.hpp"
#include "nbf/envs/triangulation.hpp"
#include "nbf/evalharness/metrics.hpp"
#include "nbf/evalharness/report.hpp"
#include "nbf/nbfilter/nbf.hpp"
#include "nbf/oracle/exact.hpp"
#include "nbf/pfilter/particle_filter.hpp"

namespace nbf::evalharness {

using numkit::RngStream;

enum class FilterKind { kOracle, kParticle, kNeural, kApprox };

/// One roster entry: "oracle", "pf:N", "nbf:N" or "approx:N" (N oracle
/// samples embedded directly).
struct FilterSpec {
  FilterKind kind = FilterKind::kOracle;
  int n = 0;

  [[nodiscard]] std::string label() const;
  [[nodiscard]] bool needs_model() const noexcept { return kind == FilterKind::kNeural || kind == FilterKind::kApprox; }
  bool operator==(const FilterSpec&) const = default;
};

/// Throws std::invalid_argument on anything else.
FilterSpec parse_filter(const std::string& text);
std::vector<FilterSpec> parse_roster(const std::string& comma_separated);

/// FNV-1a, used for stream keys and observation digests.
class Fnv64 {
 public:
  void bytes(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void value(T v) noexcept {
    bytes(&v, sizeof v);
  }
  [[nodiscard]] std::uint64_t digest() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline void digest_obs(Fnv64& h, const envs::GridObs& y) {
  h.value(static_cast<int>(y.hit_wall));
  h.value(y.direction);
}
inline void digest_obs(Fnv64& h, const envs::GoofObs& y) {
  h.value(y.prize);
  h.value(y.own_bid);
  h.value(static_cast<int>(y.outcome));
}
inline void digest_obs(Fnv64& h, const envs::TriObs& y) {
  h.value(static_cast<int>(y.range.has_value()));
  if (y.range) h.value(*y.range);
}

template <typename Obs>
std::uint64_t obs_digest(const std::vector<Obs>& obs) {
  Fnv64 h;
  for (const Obs& y : obs) digest_obs(h, y);
  return h.digest();
}

/// 1 for cells on the goal's side of the centre along every axis.
inline nbfilter::TestFn<envs::GridState> goal_quadrant(const envs::GridSpec& spec, const envs::GridPolicy& policy) {
  return [spec, goal = policy.goal](const envs::GridState& s) {
    for (int a = 0; a < spec.dim; ++a) {
      if ((2 * s.cell[a] >= spec.side) != (2 * goal[a] >= spec.side)) return 0.0;
    }
    return 1.0;
  };
}

/// Where predicted beliefs are compared: the enumerated state space for
/// discrete environments, a histogram over encoded states otherwise.
template <envs::FilterEnv Env>
struct EvalSpace {
  using State = typename Env::State;
  using Dist = std::conditional_t<Env::kDiscrete, oracle::DiscreteDist<State>, HistogramGrid>;

  HistogramSpec grid;

  Dist from_weighted(const Env& env, std::span<const State> states, std::span<const double> weights) const {
    if constexpr (Env::kDiscrete) {
      (void)env;
      std::vector<std::pair<State, double>> masses;
      masses.reserve(states.size());
      for (std::size_t i = 0; i < states.size(); ++i) masses.emplace_back(states[i], weights[i]);
      try {
        return oracle::normalize_masses(std::move(masses));
      } catch (const oracle::InconsistentObservation&) {
        throw std::invalid_argument("from_weighted: all weights are zero");
      }
    } else {
      return discretize(grid, beliefmodel::encode_states(env, states), weights);
    }
  }

  double js(const Dist& p, const Dist& q) const {
    if constexpr (Env::kDiscrete) {
      return aligned_js(p, q);
    } else {
      return js_divergence(p, q);
    }
  }
};

template <envs::FilterEnv Env>
typename EvalSpace<Env>::Dist particle_dist(const EvalSpace<Env>& space, const Env& env,
                                            const pfilter::ParticleSet<typename Env::State>& ps) {
  return space.from_weighted(env, ps.states, ps.weights());
}

/// Bins `m` draws from the model at theta.
template <envs::FilterEnv Env>
typename EvalSpace<Env>::Dist model_dist(const EvalSpace<Env>& space, const Env& env,
                                         const beliefmodel::BeliefModel& model, const beliefmodel::Embedding& theta,
                                         const typename Env::State& anchor, int m, RngStream& rng) {
  const auto drawn = beliefmodel::sample_states(model, env, theta, m, anchor, rng);
  const std::vector<double> w(drawn.states.size(), 1.0);
  return space.from_weighted(env, drawn.states, w);
}

struct EvalOptions {
  int steps = 20;
  int model_samples = 4096;
  int reference_particles = 1024;
  HistogramSpec grid{{-5.0, -5.0}, {5.0, 5.0}, 20};
  const beliefmodel::BeliefModel* model = nullptr;
  int retry_limit = nbfilter::kDefaultRetryLimit;
};

/// JS to the ground truth for steps 0..steps. After a failure every later
/// step is flagged and scored ln 2.
struct FilterTrace {
  std::vector<double> js;
  std::vector<bool> failed;
};

struct EpisodeResult {
  std::vector<FilterTrace> filters;  // roster order
  std::uint64_t obs_digest = 0;
};

inline RngStream episode_stream(std::uint64_t seed, int episode) {
  return RngStream(seed, 0x4556414c).split(static_cast<std::uint64_t>(episode));  // "EVAL"
}

/// Stream for one roster entry; keyed by label so adding filters leaves the
/// others unchanged.
inline RngStream filter_stream(const RngStream& episode_rng, const FilterSpec& f) {
  Fnv64 h;
  const std::string label = f.label();
  h.bytes(label.data(), label.size());
  return episode_rng.split(h.digest());
}

/// Simulates one ground-truth trajectory and scores every filter on the same
/// observation sequence against the exact belief (discrete) or a reference
/// particle filter (continuous).
template <envs::FilterEnv Env>
EpisodeResult run_episode(const Env& env, const std::vector<FilterSpec>& roster, const EvalOptions& opt,
                          const RngStream& episode_rng) {
  using State = typename Env::State;
  using Obs = typename Env::Obs;
  using Dist = typename EvalSpace<Env>::Dist;
  if (opt.steps < 0) throw std::invalid_argument("run_episode: negative step count");
  for (const FilterSpec& f : roster) {
    if (f.needs_model() && opt.model == nullptr) {
      throw std::invalid_argument("run_episode: " + f.label() + " needs a trained model");
    }
    if (f.needs_model() && opt.model->state_dim() != env.state_dim()) {
      throw std::invalid_argument("run_episode: model state_dim does not match the environment");
    }
  }
  const EvalSpace<Env> space{opt.grid};
  const auto steps = static_cast<std::size_t>(opt.steps);

  RngStream truth_rng = episode_rng.split(1);
  State truth = env.sample_initial(truth_rng);
  std::vector<Obs> obs;
  obs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    auto tr = env.step(truth, truth_rng);
    truth = std::move(tr.next);
    obs.push_back(std::move(tr.obs));
  }
  EpisodeResult result;
  result.obs_digest = obs_digest(obs);

  // Ground truth per step, plus what Approx Beliefs draws its samples from.
  std::vector<Dist> truth_dist;
  std::vector<oracle::DiscreteDist<State>> exact;
  std::vector<pfilter::ParticleSet<State>> reference;
  if constexpr (Env::kDiscrete) {
    exact.push_back(oracle::exact_init(env));
    for (const Obs& y : obs) exact.push_back(oracle::exact_update(env, exact.back(), y));
    truth_dist = exact;
  } else {
    reference = oracle::reference_filter(env, obs, episode_rng.split(2).next_u64(), opt.reference_particles);
    for (const auto& ps : reference) truth_dist.push_back(particle_dist(space, env, ps));
  }
  const auto draw_truth = [&](std::size_t t, int n, RngStream& rng) {
    if constexpr (Env::kDiscrete) {
      return exact[t].sample(static_cast<std::size_t>(n), rng);
    } else {
      const auto w = reference[t].weights();
      std::vector<double> cdf(w.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) cdf[i] = (acc += w[i]);
      std::vector<State> out;
      out.reserve(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * acc);
        if (it == cdf.end()) --it;
        out.push_back(reference[t].states[static_cast<std::size_t>(it - cdf.begin())]);
      }
      return out;
    }
  };

  for (const FilterSpec& f : roster) {
    RngStream rng = filter_stream(episode_rng, f);
    FilterTrace trace;
    trace.js.assign(steps + 1, std::numbers::ln2);
    trace.failed.assign(steps + 1, true);
    const auto record = [&](std::size_t t, const Dist& predicted) {
      trace.js[t] = space.js(predicted, truth_dist[t]);
      trace.failed[t] = false;
    };
    try {
      switch (f.kind) {
        case FilterKind::kOracle:
          for (std::size_t t = 0; t <= steps; ++t) record(t, truth_dist[t]);
          break;
        case FilterKind::kParticle: {
          auto ps = pfilter::pf_init(env, f.n, rng);
          record(0, particle_dist(space, env, ps));
          for (std::size_t t = 0; t < steps; ++t) {
            ps = pfilter::pf_update(env, ps, obs[t], rng, static_cast<int>(t + 1));
            record(t + 1, particle_dist(space, env, ps));
          }
          break;
        }
        case FilterKind::kNeural: {
          const nbfilter::NeuralBelief belief(*opt.model);
          auto st = nbfilter::nbf_init(belief, env, f.n, rng, opt.retry_limit);
          record(0, model_dist(space, env, *opt.model, st.theta, st.anchor, opt.model_samples, rng));
          for (std::size_t t = 0; t < steps; ++t) {
            st = nbfilter::nbf_update(belief, st, obs[t], env, rng).state;
            record(t + 1, model_dist(space, env, *opt.model, st.theta, st.anchor, opt.model_samples, rng));
          }
          break;
        }
        case FilterKind::kApprox:
          for (std::size_t t = 0; t <= steps; ++t) {
            const std::vector<State> xs = draw_truth(t, f.n, rng);
            const std::vector<double> w(xs.size(), 1.0);
            const auto theta = beliefmodel::embed_states(*opt.model, env, std::span<const State>(xs), w);
            record(t, model_dist(space, env, *opt.model, theta, xs.front(), opt.model_samples, rng));
          }
          break;
      }
    } catch (const pfilter::ParticleImpoverishment&) {
    } catch (const nbfilter::ImpoverishedUpdate&) {
    }
    result.filters.push_back(std::move(trace));
  }
  if (obs_digest(obs) != result.obs_digest) throw std::logic_error("run_episode: observation sequence changed");
  return result;
}

/// Appends one CSV row per (step, filter), step-major.
void append_rows(std::vector<EpisodeRow>& rows, const EpisodeResult& result, const std::vector<FilterSpec>& roster,
                 const std::string& env, const std::string& condition, std::uint64_t seed, int episode);

/// Times single filter updates along simulated trajectories of opt.steps
/// steps. The filter restarts (untimed) at the end of a trajectory or after
/// a failure.
template <envs::FilterEnv Env>
BenchReport bench_filter(const Env& env, const FilterSpec& f, const EvalOptions& opt, int reps, std::uint64_t seed) {
  using State = typename Env::State;
  using Obs = typename Env::Obs;
  if (f.kind == FilterKind::kApprox) throw std::invalid_argument("bench_filter: approx has no update step");
  if (f.kind == FilterKind::kNeural && opt.model == nullptr) throw std::invalid_argument("bench_filter: nbf needs a model");
  if (opt.steps < 1) throw std::invalid_argument("bench_filter: need at least one step");
  RngStream rng = RngStream(seed, 0x42454e43).split(0);  // "BENC"
  std::vector<Obs> obs;
  std::size_t t = 0;
  std::size_t episodes = 0;
  pfilter::ParticleSet<State> ps;
  std::optional<nbfilter::NeuralBelief> belief;
  if (opt.model != nullptr) belief.emplace(*opt.model);
  std::optional<nbfilter::NbfState<beliefmodel::Embedding, State>> st;
  std::optional<oracle::DiscreteDist<State>> exact;
  bool restart = true;

  const auto reset = [&] {
    if (!restart && t < obs.size()) return;
    RngStream ep = rng.split(++episodes);
    State truth = env.sample_initial(ep);
    obs.clear();
    for (int k = 0; k < opt.steps; ++k) {
      auto tr = env.step(truth, ep);
      truth = std::move(tr.next);
      obs.push_back(std::move(tr.obs));
    }
    t = 0;
    restart = false;
    switch (f.kind) {
      case FilterKind::kOracle:
        if constexpr (Env::kDiscrete) {
          exact = oracle::exact_init(env);
        } else {
          throw std::invalid_argument("bench_filter: no exact oracle for a continuous environment");
        }
        break;
      case FilterKind::kParticle:
        ps = pfilter::pf_init(env, f.n, rng);
        break;
      case FilterKind::kNeural:
        st = nbfilter::nbf_init(*belief, env, f.n, rng, opt.retry_limit);
        break;
      case FilterKind::kApprox:
        break;
    }
  };
  const auto update = [&] {
    try {
      switch (f.kind) {
        case FilterKind::kOracle:
          if constexpr (Env::kDiscrete) exact = oracle::exact_update(env, *exact, obs[t]);
          break;
        case FilterKind::kParticle:
          ps = pfilter::pf_update(env, ps, obs[t], rng, static_cast<int>(t + 1));
          break;
        case FilterKind::kNeural:
          st = nbfilter::nbf_update(*belief, *st, obs[t], env, rng).state;
          break;
        case FilterKind::kApprox:
          break;
      }
    } catch (const pfilter::ParticleImpoverishment&) {
      restart = true;
    } catch (const nbfilter::ImpoverishedUpdate&) {
      restart = true;
    }
    ++t;
  };
  return bench(update, reps, reset);
}

}  // namespace nbf::evalharness
