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
#include <numbers>
#include <set>

#include "nbf/envs/donuts.hpp"
#include "nbf/envs/goofspiel.hpp"
#include "nbf/envs/gridworld.hpp"
#include "nbf/envs/triangulation.hpp"

namespace nbf::envs {
namespace {

static_assert(DiscreteEnv<Gridworld>);
static_assert(DiscreteEnv<Goofspiel>);
static_assert(FilterEnv<Triangulation>);
static_assert(!DiscreteEnv<Triangulation>);

constexpr int kRight = 0;
constexpr int kUp = 2;

GridSpec open_grid(int side, int dim = 2) {
  GridSpec g;
  g.dim = dim;
  g.side = side;
  return g;
}

// --- Gridworld -------------------------------------------------------------

TEST(GridPolicy, InfiniteTemperatureIsUniform) {
  const GridSpec g = open_grid(5);
  const auto p = grid_policy_probs(g, {{0, 0, 0}, std::numeric_limits<double>::infinity()}, {{2, 2, 0}});
  for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(GridPolicy, TinyTemperatureGoesToGoal) {
  const GridSpec g = open_grid(5);
  const auto p = grid_policy_probs(g, {{3, 2, 0}, 1e-5}, {{2, 2, 0}});
  EXPECT_GT(p[kRight], 0.999);
}

TEST(GridPolicy, CorridorHandSoftmax) {
  // 3x1 corridor embedded as a 3x3 grid with the top two rows blocked.
  GridSpec g = open_grid(3);
  g.obstacles = {{{0, 1, 0}, 2}, {{1, 1, 0}, 2}};
  const auto p = grid_policy_probs(g, {{2, 0, 0}, 1.0}, {{0, 0, 0}});
  // Intended next cells: right (1,0) d=1, left (-1,0) d=3, up (0,1) d=3, down (0,-1) d=3.
  const double z = std::exp(-1.0) + 3.0 * std::exp(-3.0);
  EXPECT_NEAR(p[0], std::exp(-1.0) / z, 1e-15);
  EXPECT_NEAR(p[1], std::exp(-3.0) / z, 1e-15);
  EXPECT_NEAR(p[2], std::exp(-3.0) / z, 1e-15);
  EXPECT_NEAR(p[3], std::exp(-3.0) / z, 1e-15);
}

TEST(GridStep, DeterministicMoveIntoObstacleHits) {
  GridSpec g = open_grid(5);
  g.obstacles = {{{1, 2, 0}, 1}};
  numkit::RngStream rng(1, 0);
  const auto r = grid_step(g, {{2, 2, 0}, 1e-5}, {{0, 2, 0}}, rng);
  EXPECT_EQ(r.action, kRight);
  EXPECT_EQ(r.next.cell, (GridCell{0, 2, 0}));
  EXPECT_TRUE(r.obs.hit_wall);
}

TEST(GridStep, RightWallKeepsPosition) {
  // Goal on the agent's own cell at the right wall: every action has
  // distance 1, so the policy is uniform and "right" is drawn a quarter of
  // the time.
  const GridSpec g = open_grid(5);
  numkit::RngStream rng(2, 0);
  int rights = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto r = grid_step(g, {{4, 2, 0}, 1e-5}, {{4, 2, 0}}, rng);
    if (r.action == kRight) {
      ++rights;
      EXPECT_EQ(r.next.cell, (GridCell{4, 2, 0}));
      EXPECT_TRUE(r.obs.hit_wall);
    } else {
      EXPECT_FALSE(r.obs.hit_wall);
    }
  }
  EXPECT_GT(rights, 0);
}

TEST(GridStep, OpenCentreMovesUp) {
  const GridSpec g = open_grid(5);
  numkit::RngStream rng(3, 0);
  const auto r = grid_step(g, {{2, 4, 0}, 1e-5}, {{2, 2, 0}}, rng);
  EXPECT_EQ(r.action, kUp);
  EXPECT_EQ(r.next.cell, (GridCell{2, 3, 0}));
  EXPECT_FALSE(r.obs.hit_wall);
}

TEST(GridStep, FlipHalfIsFairCoin) {
  GridSpec g = open_grid(5);
  g.obs_flip_prob = 0.49999999;
  numkit::RngStream rng(4, 0);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    // At the top-right corner with the goal on the agent, right and up both
    // hit and left and down both move; each branch is flipped at rate 1/2.
    hits += grid_step(g, {{4, 4, 0}, 1e-5}, {{4, 4, 0}}, rng).obs.hit_wall ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.5, 0.01);
}

TEST(GridSupport, DeterministicOpenSpace) {
  const GridSpec g = open_grid(5);
  const auto s = grid_transition_support(g, {{2, 4, 0}, 1e-5}, {{2, 2, 0}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].prob, 1.0);
  EXPECT_EQ(s[0].next.cell, (GridCell{2, 3, 0}));
  EXPECT_DOUBLE_EQ(s[0].p_hit, 0.0);
}

TEST(GridSupport, UniformOpenSpace) {
  for (int dim : {2, 3}) {
    const GridSpec g = open_grid(5, dim);
    const auto s = grid_transition_support(g, {{}, std::numeric_limits<double>::infinity()},
                                           {{2, 2, dim == 3 ? 2 : 0}});
    ASSERT_EQ(static_cast<int>(s.size()), 2 * dim);
    for (const auto& e : s) EXPECT_DOUBLE_EQ(e.prob, 1.0 / (2 * dim));
  }
}

TEST(GridSupport, MatchesSimulationHistogram) {
  GridSpec g = open_grid(3);
  g.obstacles = {{{1, 1, 0}, 1}};
  g.obs_flip_prob = 0.1;
  const GridPolicy pol{{2, 2, 0}, 1.0};
  numkit::RngStream rng(5, 0);
  for (const GridCell& c : g.free_cells()) {
    const GridState s{c};
    const auto support = grid_transition_support(g, pol, s);
    std::map<std::pair<GridState, bool>, double> expected;
    for (const auto& e : support) {
      expected[{e.next, true}] += e.prob * grid_emission_prob(g, e, {true, -1});
      expected[{e.next, false}] += e.prob * grid_emission_prob(g, e, {false, -1});
    }
    double total = 0.0;
    for (const auto& [k, v] : expected) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);

    const int n = 1000000;
    std::map<std::pair<GridState, bool>, int> counts;
    for (int i = 0; i < n; ++i) {
      const auto r = grid_step(g, pol, s, rng);
      ++counts[{r.next, r.obs.hit_wall}];
    }
    for (const auto& [k, c2] : counts) EXPECT_GT(expected[k], 0.0);
    for (const auto& [k, p] : expected) {
      const double se = std::sqrt(p * (1 - p) / n);
      EXPECT_NEAR(static_cast<double>(counts[k]) / n, p, 3.0 * se + 1e-12);
    }
  }
}

TEST(GridSupport, EmissionsNormalized) {
  GridSpec g = open_grid(4);
  g.obs_flip_prob = 0.2;
  g.observe_direction = true;
  g.direction_error = 0.3;
  const GridPolicy pol{{3, 3, 0}, 2.0};
  for (const GridCell& c : g.free_cells()) {
    for (const auto& e : grid_transition_support(g, pol, {c})) {
      double z = 0.0;
      for (bool hit : {false, true}) {
        for (int d = 0; d < 4; ++d) z += grid_emission_prob(g, e, {hit, d});
      }
      EXPECT_NEAR(z, 1.0, 1e-12);
    }
  }
}

TEST(GridSpecTest, ValidationRejectsBadLayouts) {
  GridSpec g = open_grid(5);
  g.obstacles = {{{4, 4, 0}, 2}};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g.obstacles = {{{0, 0, 0}, 5}};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = open_grid(3);
  g.obstacles = {{{1, 0, 0}, 1}, {{1, 1, 0}, 1}, {{1, 2, 0}, 1}};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = open_grid(5);
  g.obs_flip_prob = 0.5;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(GridSpecTest, FixedLayoutHas21FreeCells) {
  GridSpec g = open_grid(5);
  g.obstacles = {{{1, 1, 0}, 2}};
  g.validate();
  EXPECT_EQ(g.free_cells().size(), 21u);
}

TEST(GridSpecTest, RandomGridsAreConnected) {
  numkit::RngStream rng(6, 0);
  for (int i = 0; i < 200; ++i) {
    const GridSpec g = random_grid(i % 2 == 0 ? 2 : 3, i % 3 == 0 ? 8 : 5, 1 + i % 2, 2 + i % 2, 0.0, rng);
    EXPECT_NO_THROW(g.validate());
    const GridPolicy p = random_policy(g, 1e-5, rng);
    EXPECT_TRUE(g.is_free(p.goal));
  }
}

TEST(GridworldEnv, SuccessorsMatchSupportTimesEmission) {
  GridSpec g = open_grid(4);
  g.obstacles = {{{1, 1, 0}, 2}};
  g.obs_flip_prob = 0.05;
  const Gridworld env(g, {{3, 0, 0}, 0.7});
  for (const GridState& s : env.free_states()) {
    for (bool hit : {false, true}) {
      std::map<GridState, double> want;
      for (const auto& e : grid_transition_support(g, env.policy(), s)) {
        want[e.next] += e.prob * grid_emission_prob(g, e, {hit, -1});
      }
      for (const auto& [x, p] : env.successors(s, {hit, -1})) EXPECT_NEAR(want[x], p, 1e-15);
    }
  }
}

TEST(GridworldEnv, DecodeClampsToNearestFreeCell) {
  GridSpec g = open_grid(5);
  g.obstacles = {{{1, 1, 0}, 2}};
  const Gridworld env(g, {{4, 4, 0}, 1e-5});
  const double inside[] = {3.2, 0.9};
  auto d = env.decode(inside, {});
  EXPECT_FALSE(d.clamped);
  EXPECT_EQ(d.state.cell, (GridCell{3, 0, 0}));
  const double blocked[] = {1.1, 1.2};
  d = env.decode(blocked, {});
  EXPECT_TRUE(d.clamped);
  EXPECT_TRUE(g.is_free(d.state.cell));
  EXPECT_EQ(d.state.cell, (GridCell{0, 1, 0}));  // centre (0.5,1.5) is nearest
  const double outside[] = {7.0, -3.0};
  d = env.decode(outside, {});
  EXPECT_TRUE(d.clamped);
  EXPECT_EQ(d.state.cell, (GridCell{4, 0, 0}));
  const double nan[] = {std::nan(""), 2.5};
  d = env.decode(nan, {});
  EXPECT_TRUE(d.clamped);
  EXPECT_TRUE(g.is_free(d.state.cell));
}

TEST(GridworldEnv, EncodeDecodeRoundTrip) {
  const GridSpec g = open_grid(4, 3);
  const Gridworld env(g, {{0, 0, 0}, 1.0});
  for (const GridState& s : env.free_states()) {
    auto v = encode(env, s);
    for (double& x : v) x += 0.5;
    const auto d = env.decode(v, {});
    EXPECT_FALSE(d.clamped);
    EXPECT_EQ(d.state, s);
  }
}

// --- Goofspiel -------------------------------------------------------------

GoofSpec goof4(double own_beta = 0.0, double opp_beta = 0.0, bool hidden = true) {
  GoofSpec s;
  s.k = 4;
  s.own_hand = {0, 1, 3};
  s.opp_hand = {0, 2, 3};
  s.prize_deck = {1, 2, 3};
  s.own_policy.beta = own_beta;
  s.opp_policy.beta = opp_beta;
  s.hidden_opponent_hand = hidden;
  return s;
}

TEST(GoofPolicy, ZeroBetaUniform) {
  const std::vector<int> hand = {0, 2, 3};
  for (double p : goof_policy_probs(4, hand, 1, {0.0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(GoofPolicy, InfiniteBetaPicksMax) {
  const std::vector<int> hand = {0, 2, 1};
  const auto p = goof_policy_probs(4, hand, 1, {std::numeric_limits<double>::infinity()});
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  const auto q = goof_policy_probs(4, hand, 1, {1e6});
  EXPECT_NEAR(q[1], 1.0, 1e-12);
}

TEST(GoofPolicy, TwoCardHandSoftmax) {
  const std::vector<int> hand = {0, 2};
  const auto p = goof_policy_probs(4, hand, 3, {1.0});
  // logits (0+1)(3+1)/16 = 0.25 and (2+1)(3+1)/16 = 0.75.
  const double z = std::exp(0.25) + std::exp(0.75);
  EXPECT_NEAR(p[0], std::exp(0.25) / z, 1e-15);
  EXPECT_NEAR(p[1], std::exp(0.75) / z, 1e-15);
}

TEST(GoofPolicy, EmptyHandRejected) {
  EXPECT_THROW(goof_policy_probs(4, std::vector<int>{}, 0, {1.0}), std::invalid_argument);
}

TEST(GoofStep, SingletonHandsDetermineOutcome) {
  const GoofSpec spec = goof4();
  GoofState s;
  s.round = 2;
  s.opp_missing = 1;
  s.prizes = {1, 2};
  s.own_bids = {0, 3};  // own remaining {1}
  s.opp_bids = {0, 3};  // opp remaining {2}
  numkit::RngStream rng(7, 0);
  const auto r = goof_step(spec, s, rng);
  EXPECT_EQ(r.obs.prize, 3);
  EXPECT_EQ(r.obs.own_bid, 1);
  EXPECT_EQ(r.opp_bid, 2);
  EXPECT_EQ(r.obs.outcome, Outcome::kLoss);
  EXPECT_EQ(r.next.round, 3);
  EXPECT_THROW(goof_step(spec, r.next, rng), std::invalid_argument);
}

TEST(GoofStep, IdenticalBidsDraw) { EXPECT_EQ(compare_bids(2, 2), Outcome::kDraw); }

TEST(GoofStep, OutcomeFrequenciesMatchBidEnumeration) {
  const GoofSpec spec = goof4(0.0, 0.0, false);
  const Goofspiel env(spec);
  GoofState s;
  s.opp_missing = 1;
  // Exact first-round outcome law: own hand {0,1,3}, opp hand {0,2,3}, both uniform.
  std::map<Outcome, double> want;
  for (int a : spec.own_hand) {
    for (int b : spec.opp_hand) want[compare_bids(a, b)] += 1.0 / 9.0;
  }
  numkit::RngStream rng(8, 0);
  const int n = 100000;
  std::map<Outcome, int> got;
  for (int i = 0; i < n; ++i) ++got[goof_step(spec, s, rng).obs.outcome];
  for (const auto& [o, p] : want) {
    EXPECT_NEAR(static_cast<double>(got[o]) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(GoofStep, JointLawMatchesSuccessors) {
  const GoofSpec spec = goof4(1.5, -2.0, true);
  const Goofspiel env(spec);
  GoofState s;
  s.opp_missing = 2;
  s.round = 1;
  s.prizes = {3};
  s.own_bids = {1};
  s.opp_bids = {0};
  std::map<std::pair<GoofObs, GoofState>, double> want;
  for (int prize : {1, 2}) {
    for (int own : {0, 3}) {
      for (Outcome o : {Outcome::kWin, Outcome::kDraw, Outcome::kLoss}) {
        const GoofObs y{prize, own, o};
        for (const auto& [x, p] : env.successors(s, y)) want[{y, x}] += p;
      }
    }
  }
  double total = 0.0;
  for (const auto& [k, p] : want) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  numkit::RngStream rng(9, 0);
  const int n = 1000000;
  std::map<std::pair<GoofObs, GoofState>, int> got;
  for (int i = 0; i < n; ++i) {
    const auto t = env.step(s, rng);
    ++got[{t.obs, t.next}];
  }
  for (const auto& [k, c] : got) EXPECT_GT(want[k], 0.0);
  for (const auto& [k, p] : want) {
    EXPECT_NEAR(static_cast<double>(got[k]) / n, p, 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
  }
}

TEST(GoofspielEnv, InitialDistribution) {
  const Goofspiel hidden(goof4());
  const auto h = hidden.initial_distribution();
  ASSERT_EQ(h.size(), 4u);
  for (const auto& [x, p] : h) EXPECT_DOUBLE_EQ(p, 0.25);
  const Goofspiel pub(goof4(0, 0, false));
  const auto q = pub.initial_distribution();
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].first.opp_missing, 1);
  EXPECT_DOUBLE_EQ(q[0].second, 1.0);
}

TEST(GoofspielEnv, SpecValidation) {
  GoofSpec s = goof4();
  s.own_hand = {0, 0, 1};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = goof4();
  s.prize_deck = {0, 1};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = goof4();
  s.k = 8;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(GoofspielEnv, PropagateWeightsMatchSuccessors) {
  const Goofspiel env(goof4(0.7, 1.3, true));
  GoofState s;
  s.opp_missing = 0;
  const GoofObs y{2, 1, Outcome::kLoss};
  std::map<GoofState, double> want;
  for (const auto& [x, p] : env.successors(s, y)) want[x] = p;
  numkit::RngStream rng(10, 0);
  std::map<GoofState, double> got;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto pr = env.propagate(s, y, rng);
    if (std::isfinite(pr.log_weight)) got[pr.next] += std::exp(pr.log_weight) / n;
  }
  for (const auto& [x, p] : want) EXPECT_NEAR(got[x], p, 0.01);
  for (const auto& [x, p] : got) EXPECT_TRUE(want.count(x));
}

TEST(GoofspielEnv, DecodeProjectsToLegalHistory) {
  const Goofspiel env(goof4());
  GoofState anchor;
  anchor.round = 2;
  anchor.prizes = {1, 3};
  anchor.own_bids = {0, 1};
  anchor.opp_missing = 0;
  anchor.opp_bids = {2, 3};
  auto v = encode(env, anchor);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v[3], -1.0);
  for (double& x : v) x += 0.5;
  auto d = env.decode(v, anchor);
  EXPECT_FALSE(d.clamped);
  EXPECT_EQ(d.state, anchor);

  const double dup[] = {1.5, 2.5, 2.6, -0.5};  // repeated bid
  d = env.decode(dup, anchor);
  EXPECT_TRUE(d.clamped);
  EXPECT_EQ(d.state.opp_missing, 1);
  EXPECT_NE(d.state.opp_bids[0], d.state.opp_bids[1]);
  EXPECT_NE(d.state.opp_bids[0], 1);
  EXPECT_NE(d.state.opp_bids[1], 1);
  EXPECT_EQ(d.state.prizes, anchor.prizes);

  const double missing_played[] = {2.5, 2.5, 3.5, -0.5};  // bid equals missing card
  d = env.decode(missing_played, anchor);
  EXPECT_TRUE(d.clamped);
  std::set<int> cards = {d.state.opp_missing, d.state.opp_bids[0], d.state.opp_bids[1]};
  EXPECT_EQ(cards.size(), 3u);
}

TEST(GoofspielEnv, DomainBound) {
  const Goofspiel env(goof4());
  EXPECT_DOUBLE_EQ(env.domain_bound(0), 4.0);
  EXPECT_DOUBLE_EQ(env.domain_bound(2), 4.0 * 3 * 2);
  const Goofspiel pub(goof4(0, 0, false));
  EXPECT_DOUBLE_EQ(pub.domain_bound(3), 6.0);
}

// --- Triangulation ---------------------------------------------------------

TEST(TriStep, NoiselessMoveRight) {
  TriSpec spec;
  spec.sigma_move = 0.0;
  numkit::RngStream rng(11, 0);
  const auto r = tri_step(spec, {0.0, 0.0, 0}, TriAction::kRight, rng);
  EXPECT_DOUBLE_EQ(r.next.x, 0.5);
  EXPECT_DOUBLE_EQ(r.next.y, 0.0);
  EXPECT_FALSE(r.obs.range.has_value());
  EXPECT_EQ(r.next.phase, 1);
}

TEST(TriStep, NoiselessScanAtBeacon) {
  TriSpec spec;
  spec.sigma_scan = 0.0;
  numkit::RngStream rng(12, 0);
  // Phase advances to 0 during the step, making (-2,-2) the active beacon.
  const auto r = tri_step(spec, {-2.0, -2.0, 2}, TriAction::kScan, rng);
  ASSERT_TRUE(r.obs.range.has_value());
  EXPECT_DOUBLE_EQ(*r.obs.range, 0.0);
  EXPECT_EQ(r.next.phase, 0);
}

TEST(TriStep, ScanMoments) {
  const TriSpec spec;
  numkit::RngStream rng(13, 0);
  const TriState s{1.0, 0.5, 0};
  const auto& b = spec.beacons[1];
  const double truth = std::hypot(1.0 - b[0], 0.5 - b[1]);
  const int n = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = *tri_step(spec, s, TriAction::kScan, rng).obs.range;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, truth, 0.01);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 0.25, 0.01);
}

TEST(TriStep, ClampedAndStop) {
  TriSpec spec;
  spec.sigma_move = 0.0;
  numkit::RngStream rng(14, 0);
  auto r = tri_step(spec, {4.8, 0.0, 0}, TriAction::kRight, rng);
  EXPECT_DOUBLE_EQ(r.next.x, 5.0);
  r = tri_step(spec, {0.0, 0.0, 1}, TriAction::kStop, rng);
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(r.next.phase, 2);
}

TEST(TriStep, PhaseIsStepCountModThree) {
  const Triangulation env(TriSpec{}, {TriAction::kUp, 0.5});
  numkit::RngStream rng(15, 0);
  TriState s = env.sample_initial(rng);
  for (int t = 1; t <= 50; ++t) {
    s = env.step(s, rng).next;
    EXPECT_EQ(s.phase, t % 3);
    EXPECT_LE(std::abs(s.x), 5.0);
    EXPECT_LE(std::abs(s.y), 5.0);
  }
}

TEST(TriObs, LogDensity) {
  const TriSpec spec;
  const TriState s{0.0, 0.0, 0};
  const double d = std::hypot(2.0, 2.0);
  const double mode = -std::log(0.25 * std::sqrt(2.0 * std::numbers::pi));
  EXPECT_NEAR(tri_obs_logdensity(spec, s, d), mode, 1e-14);
  EXPECT_NEAR(tri_obs_logdensity(spec, s, d + 0.25), mode - 0.5, 1e-14);
  numkit::RngStream rng(16, 0);
  for (int i = 0; i < 100; ++i) {
    const TriState p{rng.uniform(-5, 5), rng.uniform(-5, 5), static_cast<int>(rng.uniform_int(3))};
    const double y = rng.uniform(0, 10);
    const auto& b = spec.beacons[static_cast<std::size_t>(p.phase)];
    const double mu = std::sqrt((p.x - b[0]) * (p.x - b[0]) + (p.y - b[1]) * (p.y - b[1]));
    const double pdf = std::exp(-(y - mu) * (y - mu) / (2 * 0.0625)) / (0.25 * std::sqrt(2 * std::numbers::pi));
    EXPECT_NEAR(tri_obs_logdensity(spec, p, y), std::log(pdf), 1e-10);
  }
}

TEST(TriangulationEnv, DecodeClampsIntoArena) {
  const Triangulation env(TriSpec{}, {TriAction::kLeft, 0.3});
  const TriState anchor{0, 0, 2};
  const double in[] = {1.0, -2.0};
  auto d = env.decode(in, anchor);
  EXPECT_FALSE(d.clamped);
  EXPECT_EQ(d.state, (TriState{1.0, -2.0, 2}));
  const double out[] = {9.0, -2.0};
  d = env.decode(out, anchor);
  EXPECT_TRUE(d.clamped);
  EXPECT_DOUBLE_EQ(d.state.x, 5.0);
}

TEST(TriangulationEnv, SpecValidation) {
  TriSpec s;
  s.sigma_scan = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(Triangulation(TriSpec{}, {TriAction::kScan, 0.5}), std::invalid_argument);
  EXPECT_THROW(Triangulation(TriSpec{}, {TriAction::kUp, 1.5}), std::invalid_argument);
}

// --- Donuts ----------------------------------------------------------------

TEST(Donuts, ZeroWidthOnCircle) {
  numkit::RngStream rng(17, 0);
  for (const auto& p : donut_sample({{1.0, -1.0}, 2.0, 0.0}, 1000, rng)) {
    EXPECT_NEAR(std::hypot(p[0] - 1.0, p[1] + 1.0), 2.0, 1e-6);
  }
}

TEST(Donuts, SymmetricMean) {
  numkit::RngStream rng(18, 0);
  const auto pts = donut_sample({{0.0, 0.0}, 2.0, 0.2}, 100000, rng);
  double mx = 0.0;
  double my = 0.0;
  double mr = 0.0;
  for (const auto& p : pts) {
    mx += p[0];
    my += p[1];
    mr += std::hypot(p[0], p[1]);
  }
  EXPECT_NEAR(mx / pts.size(), 0.0, 0.02);
  EXPECT_NEAR(my / pts.size(), 0.0, 0.02);
  EXPECT_NEAR(mr / pts.size(), 2.0, 0.01);
}

TEST(Donuts, Validation) {
  numkit::RngStream rng(19, 0);
  EXPECT_THROW(donut_sample({{0, 0}, -1.0, 0.1}, 10, rng), std::invalid_argument);
  EXPECT_THROW(donut_sample({{0, 0}, 1.0, 0.1}, 0, rng), std::invalid_argument);
}

}  // namespace
}  // namespace nbf::envs
