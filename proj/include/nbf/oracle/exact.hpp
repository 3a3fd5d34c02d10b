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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nbf/envs/env.hpp"
#include "nbf/numkit/rng.hpp"
#include "nbf/pfilter/particle_filter.hpp"

namespace nbf::oracle {

inline constexpr std::size_t kMaxEnumeratedStates = 1'000'000;

/// The observation has zero probability under the current belief.
class InconsistentObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact belief over an enumerated domain, sorted by state.
template <typename State>
struct DiscreteDist {
  std::vector<State> domain;
  std::vector<double> probs;

  [[nodiscard]] std::size_t size() const noexcept { return domain.size(); }

  [[nodiscard]] double prob_of(const State& s) const {
    const auto it = std::lower_bound(domain.begin(), domain.end(), s);
    if (it == domain.end() || !(*it == s)) return 0.0;
    return probs[static_cast<std::size_t>(it - domain.begin())];
  }

  /// Throws std::logic_error when probs are negative, unnormalized, or the
  /// domain is unsorted or has duplicates.
  void validate(double tol = 1e-12) const {
    if (domain.size() != probs.size()) throw std::logic_error("DiscreteDist: domain/probs size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!(probs[i] >= 0.0)) throw std::logic_error("DiscreteDist: negative probability");
      if (i > 0 && !(domain[i - 1] < domain[i])) throw std::logic_error("DiscreteDist: domain unsorted or duplicated");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > tol) throw std::logic_error("DiscreteDist: probabilities sum to " + std::to_string(total));
  }

  /// Draws n states (with replacement).
  std::vector<State> sample(std::size_t n, numkit::RngStream& rng) const {
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) cdf[i] = (acc += probs[i]);
    std::vector<State> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      out.push_back(domain[static_cast<std::size_t>(it - cdf.begin())]);
    }
    return out;
  }
};

/// Sorts (state, mass) pairs, merges duplicates and normalizes.
template <typename State>
DiscreteDist<State> normalize_masses(std::vector<std::pair<State, double>> masses) {
  if (masses.size() > kMaxEnumeratedStates) {
    throw std::length_error("exact oracle: " + std::to_string(masses.size()) + " states exceed the enumeration cap");
  }
  std::sort(masses.begin(), masses.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DiscreteDist<State> d;
  double total = 0.0;
  for (auto& [s, m] : masses) {
    if (m <= 0.0) continue;
    total += m;
    if (!d.domain.empty() && d.domain.back() == s) {
      d.probs.back() += m;
    } else {
      d.domain.push_back(std::move(s));
      d.probs.push_back(m);
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw InconsistentObservation("exact oracle: observation has zero probability");
  for (double& p : d.probs) p /= total;
  return d;
}

template <envs::DiscreteEnv E>
DiscreteDist<typename E::State> exact_init(const E& env) {
  return normalize_masses(env.initial_distribution());
}

/// p'(x') proportional to sum_x p(x) T(x, pi)[x'] H(x, x')[obs].
template <envs::DiscreteEnv E>
DiscreteDist<typename E::State> exact_update(const E& env, const DiscreteDist<typename E::State>& belief,
                                             const typename E::Obs& obs) {
  std::vector<std::pair<typename E::State, double>> masses;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.probs[i] <= 0.0) continue;
    for (auto& [next, w] : env.successors(belief.domain[i], obs)) masses.emplace_back(std::move(next), belief.probs[i] * w);
  }
  return normalize_masses(std::move(masses));
}

/// Per-step particle sets of a large particle filter (the default n is the
/// reference size used as ground truth for continuous environments).
/// Element 0 is the initial set.
template <envs::FilterEnv E>
std::vector<pfilter::ParticleSet<typename E::State>> reference_filter(const E& env,
                                                                      const std::vector<typename E::Obs>& observations,
                                                                      std::uint64_t seed, int n = 1024) {
  numkit::RngStream rng(seed, 0x5245464552454e43ULL);
  std::vector<pfilter::ParticleSet<typename E::State>> out;
  out.reserve(observations.size() + 1);
  out.push_back(pfilter::pf_init(env, n, rng));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    out.push_back(pfilter::pf_update(env, out.back(), observations[t], rng, static_cast<int>(t + 1)));
  }
  return out;
}

}  // namespace nbf::oracle
