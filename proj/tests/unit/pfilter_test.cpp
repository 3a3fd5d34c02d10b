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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "../support/chain_env.hpp"
#include "nbf/envs/gridworld.hpp"
#include "nbf/envs/triangulation.hpp"
#include "nbf/oracle/exact.hpp"
#include "nbf/pfilter/particle_filter.hpp"

namespace nbf::pfilter {
namespace {

using envs::GridObs;
using envs::GridSpec;
using envs::GridState;
using envs::Gridworld;

GridSpec corridor() {
  GridSpec g;
  g.side = 3;
  g.obstacles = {{{0, 1, 0}, 2}, {{1, 1, 0}, 2}};
  return g;
}

TEST(Ess, Examples) {
  const std::vector<double> uniform(10, 0.1);
  EXPECT_NEAR(ess(uniform), 10.0, 1e-12);
  const std::vector<double> one = {0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(ess(one), 1.0);
  const std::vector<double> two = {0.7, 0.3};
  EXPECT_NEAR(ess(two), 1.0 / 0.58, 1e-12);
  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_THROW(ess(zero), std::invalid_argument);
}

TEST(Systematic, StrideWalkThrough) {
  const std::vector<double> w = {0.5, 0.5};
  EXPECT_EQ(systematic_indices(w, 0.25), (std::vector<std::size_t>{0, 1}));
  const std::vector<double> point = {0.0, 1.0, 0.0};
  EXPECT_EQ(systematic_indices(point, 0.1), (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Systematic, IntegralCountsExact) {
  const std::vector<double> w = {0.9, 0.1, 0, 0, 0, 0, 0, 0, 0, 0};
  numkit::RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto idx = systematic_indices(w, rng.uniform() / 10.0);
    EXPECT_EQ(std::count(idx.begin(), idx.end(), 0u), 9);
  }
}

TEST(Systematic, OffspringCountsFloorOrCeil) {
  numkit::RngStream rng(2, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(50);
    std::vector<double> w(n);
    double z = 0.0;
    for (double& v : w) z += (v = rng.uniform() < 0.3 ? 0.0 : rng.uniform());
    if (z == 0.0) continue;
    for (double& v : w) v /= z;
    const auto idx = systematic_indices(w, rng.uniform() / static_cast<double>(n));
    ASSERT_EQ(idx.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double expect = static_cast<double>(n) * w[i];
      const auto c = static_cast<double>(std::count(idx.begin(), idx.end(), i));
      EXPECT_GE(c, std::floor(expect - 1e-9));
      EXPECT_LE(c, std::ceil(expect + 1e-9));
    }
  }
}

TEST(PfInit, SingleParticle) {
  numkit::RngStream rng(3, 0);
  const auto ps = pf_init(testing::ChainEnv{}, 1, rng);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_DOUBLE_EQ(ps.weights()[0], 1.0);
  EXPECT_THROW(pf_init(testing::ChainEnv{}, 0, rng), std::invalid_argument);
}

TEST(PfInit, TwoByTwoMultinomial) {
  GridSpec g;
  g.side = 2;
  const Gridworld env(g, {{0, 0, 0}, 1.0});
  numkit::RngStream rng(4, 0);
  const auto ps = pf_init(env, 100000, rng);
  std::map<GridState, int> counts;
  for (const auto& s : ps.states) ++counts[s];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [s, c] : counts) EXPECT_NEAR(c / 1e5, 0.25, 0.005);
}

TEST(PfInit, TriangulationInsideArena) {
  const envs::Triangulation env(envs::TriSpec{}, {envs::TriAction::kUp, 0.5});
  numkit::RngStream rng(5, 0);
  for (const auto& s : pf_init(env, 5000, rng).states) {
    EXPECT_LE(std::abs(s.x), 5.0);
    EXPECT_LE(std::abs(s.y), 5.0);
    EXPECT_EQ(s.phase, 0);
  }
}

TEST(PfUpdate, ConstantEmissionKeepsUniformWeights) {
  numkit::RngStream rng(6, 0);
  const testing::ChainEnv env;
  const auto ps = pf_init(env, 64, rng);
  const auto next = pf_update(env, ps, 0, rng);
  for (double w : next.weights()) EXPECT_NEAR(w, 1.0 / 64.0, 1e-15);
}

TEST(PfUpdate, CorridorMatchesOracle) {
  const Gridworld env(corridor(), {{2, 0, 0}, 1.0, 0});
  ParticleSet<GridState> ps;
  for (int i = 0; i < 300; ++i) ps.states.push_back(GridState{{i % 3, 0, 0}});
  ps.log_weights.assign(300, -std::log(300.0));
  const ParticleSet<GridState> before = ps;
  numkit::RngStream rng(7, 0);
  const auto next = pf_update(env, ps, GridObs{false, -1}, rng);
  EXPECT_EQ(ps.states, before.states);
  EXPECT_EQ(ps.log_weights, before.log_weights);
  std::map<GridState, double> mass;
  const auto w = next.weights();
  for (std::size_t i = 0; i < next.size(); ++i) mass[next.states[i]] += w[i];
  EXPECT_EQ(mass.count(GridState{{0, 0, 0}}), 0u);
  EXPECT_NEAR((mass[GridState{{1, 0, 0}}]), 0.5, 1e-12);
  EXPECT_NEAR((mass[GridState{{2, 0, 0}}]), 0.5, 1e-12);
}

TEST(PfUpdate, ImpossibleObservationRaisesWithStep) {
  const Gridworld env(corridor(), {{2, 0, 0}, 1.0, 0});
  ParticleSet<GridState> ps;
  ps.states = {GridState{{0, 0, 0}}, GridState{{1, 0, 0}}};
  ps.log_weights = {std::log(0.5), std::log(0.5)};
  numkit::RngStream rng(8, 0);
  try {
    (void)pf_update(env, ps, GridObs{true, -1}, rng, 17);
    FAIL() << "expected impoverishment";
  } catch (const ParticleImpoverishment& e) {
    EXPECT_EQ(e.step(), 17);
  }
}

TEST(PfUpdate, ResamplesBelowHalfEss) {
  const Gridworld env(corridor(), {{2, 0, 0}, 1.0, 0});
  ParticleSet<GridState> ps;
  for (int i = 0; i < 30; ++i) ps.states.push_back(GridState{{i % 3, 0, 0}});
  ps.log_weights.assign(30, -std::log(30.0));
  numkit::RngStream rng(9, 0);
  // Only the 10 particles at cell 2 survive a hit: ESS = 10 < 15.
  const auto next = pf_update(env, ps, GridObs{true, -1}, rng);
  for (double w : next.weights()) EXPECT_NEAR(w, 1.0 / 30.0, 1e-15);
  for (const auto& s : next.states) EXPECT_EQ(s.cell[0], 2);
}

TEST(PfUpdate, LongEpisodesDoNotUnderflow) {
  GridSpec g;
  g.side = 5;
  g.obs_flip_prob = 0.01;
  const Gridworld env(g, {{4, 4, 0}, 1.0});
  numkit::RngStream rng(10, 0);
  auto ps = pf_init(env, 50, rng);
  GridState truth = env.sample_initial(rng);
  for (int t = 0; t < 2000; ++t) {
    const auto tr = env.step(truth, rng);
    truth = tr.next;
    ps = pf_update(env, ps, tr.obs, rng, t + 1);
    double z = 0.0;
    for (double w : ps.weights()) z += w;
    ASSERT_NEAR(z, 1.0, 1e-9);
  }
}

// Self-normalized estimates of a bounded test function converge at n^{-1/2}.
TEST(PfConvergence, ErrorSlopeIsMinusOneHalf) {
  GridSpec g;
  g.side = 5;
  g.obstacles = {{{1, 1, 0}, 2}};
  g.obs_flip_prob = 0.05;
  const Gridworld env(g, {{4, 4, 0}, 1.0});
  auto f = [](const GridState& s) { return (s.cell[0] + 2.0 * s.cell[1]) / 12.0; };
  const std::vector<int> sizes = {64, 256, 1024, 4096};
  const int reps = 150;
  const int steps = 8;
  std::vector<double> mae(sizes.size(), 0.0);
  for (int r = 0; r < reps; ++r) {
    numkit::RngStream world(11, static_cast<std::uint64_t>(r));
    GridState truth = env.sample_initial(world);
    std::vector<GridObs> obs;
    auto belief = oracle::exact_init(env);
    for (int t = 0; t < steps; ++t) {
      const auto tr = env.step(truth, world);
      truth = tr.next;
      obs.push_back(tr.obs);
      belief = oracle::exact_update(env, belief, tr.obs);
    }
    double exact = 0.0;
    for (std::size_t i = 0; i < belief.size(); ++i) exact += belief.probs[i] * f(belief.domain[i]);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      numkit::RngStream rng(12 + k, static_cast<std::uint64_t>(r));
      auto ps = pf_init(env, sizes[k], rng);
      for (int t = 0; t < steps; ++t) ps = pf_update(env, ps, obs[static_cast<std::size_t>(t)], rng, t + 1);
      const auto w = ps.weights();
      double est = 0.0;
      for (std::size_t i = 0; i < ps.size(); ++i) est += w[i] * f(ps.states[i]);
      mae[k] += std::abs(est - exact) / reps;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double x = std::log(sizes[k]);
    const double y = std::log(mae[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_GE(slope, -0.7);
  EXPECT_LE(slope, -0.3);
}

TEST(ReferenceFilter, DeterministicPerSeed) {
  const envs::Triangulation env(envs::TriSpec{}, {envs::TriAction::kLeft, 0.5});
  numkit::RngStream rng(13, 0);
  auto truth = env.sample_initial(rng);
  std::vector<envs::TriObs> obs;
  for (int t = 0; t < 10; ++t) {
    const auto tr = env.step(truth, rng);
    truth = tr.next;
    obs.push_back(tr.obs);
  }
  const auto a = oracle::reference_filter(env, obs, 99);
  const auto b = oracle::reference_filter(env, obs, 99);
  ASSERT_EQ(a.size(), obs.size() + 1);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].size(), 1024u);
    EXPECT_EQ(a[t].states, b[t].states);
    EXPECT_EQ(a[t].log_weights, b[t].log_weights);
  }
}

TEST(ReferenceFilter, ZeroNoiseCollapsesOnTruth) {
  // Deterministic chain with a fully informative first observation: every
  // surviving particle sits on the true state afterwards.
  GridSpec g = corridor();
  const Gridworld env(g, {{2, 0, 0}, 1.0, 0});
  const std::vector<GridObs> obs = {{true, -1}, {true, -1}, {true, -1}};
  const auto trace = oracle::reference_filter(env, obs, 5);
  for (std::size_t t = 1; t < trace.size(); ++t) {
    const auto w = trace[t].weights();
    for (std::size_t i = 0; i < trace[t].size(); ++i) {
      if (w[i] > 0.0) {
        EXPECT_EQ(trace[t].states[i].cell[0], 2);
      }
    }
  }
}

}  // namespace
}  // namespace nbf::pfilter
