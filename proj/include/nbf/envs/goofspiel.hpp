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
#include <cstdint>
#include <span>
#include <vector>

#include "nbf/envs/env.hpp"

namespace nbf::envs {

inline constexpr int kGoofMaxK = 7;

/// Softmax bidding policy with logit(c) = beta * (c + 1) * (prize + 1) / k^2.
struct GoofPolicyParams {
  double beta = 0.0;
};

struct GoofSpec {
  int k = 4;
  std::vector<int> own_hand;    // the observing player
  std::vector<int> opp_hand;    // used as the true deal when hands are public
  std::vector<int> prize_deck;
  GoofPolicyParams own_policy;
  GoofPolicyParams opp_policy;
  /// When true the observer does not know which card is missing from the
  /// opponent's hand and starts from a uniform belief over the k deals.
  bool hidden_opponent_hand = true;

  void validate() const;
  [[nodiscard]] int rounds() const noexcept { return k - 1; }
};

/// A k-card spec with each hand and the prize deck a random (k-1)-subset.
GoofSpec random_goof_spec(int k, double own_beta, double opp_beta, bool hidden_opponent_hand,
                          RngStream& rng);

enum class Outcome : std::int8_t { kWin = 0, kDraw = 1, kLoss = 2 };

[[nodiscard]] Outcome compare_bids(int own_bid, int opp_bid) noexcept;

/// What the observing player sees after a round: the prize card, its own
/// bid, and who won.
struct GoofObs {
  int prize = 0;
  int own_bid = 0;
  Outcome outcome = Outcome::kDraw;
  auto operator<=>(const GoofObs&) const = default;
};

/// Public history (prizes, own bids) plus the hidden part: the card missing
/// from the opponent's deal and the opponent's bid history. Entries past
/// `round` are zero.
struct GoofState {
  std::int8_t round = 0;
  std::int8_t opp_missing = 0;
  std::array<std::int8_t, kGoofMaxK - 1> prizes{};
  std::array<std::int8_t, kGoofMaxK - 1> own_bids{};
  std::array<std::int8_t, kGoofMaxK - 1> opp_bids{};
  auto operator<=>(const GoofState&) const = default;
};

/// Cards still in a hand of {0..k-1} minus `missing` after `played`.
std::vector<int> remaining_cards(int k, int missing, std::span<const std::int8_t> played);

/// Softmax over `hand`; probabilities are returned in hand order.
std::vector<double> goof_policy_probs(int k, std::span<const int> hand, int prize,
                                      const GoofPolicyParams& params);

struct GoofStepResult {
  GoofState next;
  GoofObs obs;
  int opp_bid = 0;
};

GoofStepResult goof_step(const GoofSpec& spec, const GoofState& state, RngStream& rng);

class Goofspiel {
 public:
  using State = GoofState;
  using Obs = GoofObs;
  static constexpr bool kDiscrete = true;

  explicit Goofspiel(GoofSpec spec);

  [[nodiscard]] const GoofSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] int own_missing() const noexcept { return own_missing_; }
  [[nodiscard]] int prize_missing() const noexcept { return prize_missing_; }
  [[nodiscard]] int true_opp_missing() const noexcept { return opp_missing_; }

  State sample_initial(RngStream& rng) const;
  Transition<State, Obs> step(const State& s, RngStream& rng) const;
  Propagated<State> propagate(const State& s, const Obs& y, RngStream& rng) const;
  /// Hidden-hand mode: [missing card, opponent bids]; public mode: the bids.
  /// Bids not yet played are -1.
  [[nodiscard]] int state_dim() const noexcept;
  void encode(const State& s, std::span<double> out) const;
  /// Public history is copied from the anchor. An illegal hidden part is
  /// replaced by the legal one whose code is nearest.
  Decoded<State> decode(std::span<const double> code, const State& anchor) const;

  std::vector<std::pair<State, double>> initial_distribution() const;
  std::vector<std::pair<State, double>> successors(const State& s, const Obs& y) const;

  /// Upper bound on the number of hidden states after t rounds.
  [[nodiscard]] double domain_bound(int t) const noexcept;

 private:
  GoofSpec spec_;
  int own_missing_ = 0;
  int prize_missing_ = 0;
  int opp_missing_ = 0;
};

}  // namespace nbf::envs
