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

#include "nbf/envs/goofspiel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nbf::envs {

namespace {

int missing_card(int k, const std::vector<int>& cards, const char* what) {
  if (static_cast<int>(cards.size()) != k - 1) {
    throw std::invalid_argument(std::string(what) + " must hold exactly k-1 = " + std::to_string(k - 1) +
                                " cards, got " + std::to_string(cards.size()));
  }
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  for (int c : cards) {
    if (c < 0 || c >= k) throw std::invalid_argument(std::string(what) + ": card " + std::to_string(c) + " out of range");
    if (seen[static_cast<std::size_t>(c)] != 0) {
      throw std::invalid_argument(std::string(what) + ": duplicate card " + std::to_string(c));
    }
    seen[static_cast<std::size_t>(c)] = 1;
  }
  return static_cast<int>(std::find(seen.begin(), seen.end(), 0) - seen.begin());
}

std::vector<int> random_subset(int k, RngStream& rng) {
  const int drop = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
  std::vector<int> out;
  for (int c = 0; c < k; ++c) {
    if (c != drop) out.push_back(c);
  }
  return out;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

double card_prob(int k, const std::vector<int>& hand, int card, int prize, const GoofPolicyParams& params) {
  const auto it = std::find(hand.begin(), hand.end(), card);
  if (it == hand.end()) return 0.0;
  const std::vector<double> p = goof_policy_probs(k, hand, prize, params);
  return p[static_cast<std::size_t>(it - hand.begin())];
}

}  // namespace

void GoofSpec::validate() const {
  if (k < 4 || k > kGoofMaxK) throw std::invalid_argument("goofspiel k must lie in [4, 7], got " + std::to_string(k));
  missing_card(k, own_hand, "own_hand");
  missing_card(k, opp_hand, "opp_hand");
  missing_card(k, prize_deck, "prize_deck");
  if (!std::isfinite(own_policy.beta) || !std::isfinite(opp_policy.beta)) {
    throw std::invalid_argument("goofspiel policy beta must be finite");
  }
}

GoofSpec random_goof_spec(int k, double own_beta, double opp_beta, bool hidden_opponent_hand,
                          RngStream& rng) {
  GoofSpec spec;
  spec.k = k;
  spec.own_hand = random_subset(k, rng);
  spec.opp_hand = random_subset(k, rng);
  spec.prize_deck = random_subset(k, rng);
  spec.own_policy.beta = own_beta;
  spec.opp_policy.beta = opp_beta;
  spec.hidden_opponent_hand = hidden_opponent_hand;
  spec.validate();
  return spec;
}

Outcome compare_bids(int own_bid, int opp_bid) noexcept {
  if (own_bid > opp_bid) return Outcome::kWin;
  if (own_bid < opp_bid) return Outcome::kLoss;
  return Outcome::kDraw;
}

std::vector<int> remaining_cards(int k, int missing, std::span<const std::int8_t> played) {
  std::vector<int> out;
  for (int c = 0; c < k; ++c) {
    if (c == missing) continue;
    if (std::find(played.begin(), played.end(), static_cast<std::int8_t>(c)) != played.end()) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<double> goof_policy_probs(int k, std::span<const int> hand, int prize,
                                      const GoofPolicyParams& params) {
  if (hand.empty()) throw std::invalid_argument("goof_policy_probs: empty hand");
  std::vector<double> p(hand.size());
  if (std::isinf(params.beta)) {
    const auto best = std::max_element(hand.begin(), hand.end());
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(params.beta > 0 ? best - hand.begin()
                                               : std::min_element(hand.begin(), hand.end()) - hand.begin())] = 1.0;
    return p;
  }
  const double scale = params.beta * (prize + 1) / static_cast<double>(k * k);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hand.size(); ++i) {
    p[i] = scale * (hand[i] + 1);
    top = std::max(top, p[i]);
  }
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

GoofStepResult goof_step(const GoofSpec& spec, const GoofState& state, RngStream& rng) {
  const int t = state.round;
  if (t >= spec.rounds()) throw std::invalid_argument("goof_step: state is terminal");
  const auto n = static_cast<std::size_t>(t);
  const int prize_missing = missing_card(spec.k, spec.prize_deck, "prize_deck");
  const int own_missing = missing_card(spec.k, spec.own_hand, "own_hand");
  const std::vector<int> prizes = remaining_cards(spec.k, prize_missing, std::span(state.prizes).first(n));
  const std::vector<int> own = remaining_cards(spec.k, own_missing, std::span(state.own_bids).first(n));
  const std::vector<int> opp = remaining_cards(spec.k, state.opp_missing, std::span(state.opp_bids).first(n));

  GoofStepResult r;
  const int prize = prizes[rng.uniform_int(prizes.size())];
  const int own_bid = own[rng.categorical(goof_policy_probs(spec.k, own, prize, spec.own_policy))];
  const int opp_bid = opp[rng.categorical(goof_policy_probs(spec.k, opp, prize, spec.opp_policy))];
  r.next = state;
  r.next.prizes[n] = static_cast<std::int8_t>(prize);
  r.next.own_bids[n] = static_cast<std::int8_t>(own_bid);
  r.next.opp_bids[n] = static_cast<std::int8_t>(opp_bid);
  r.next.round = static_cast<std::int8_t>(t + 1);
  r.obs = GoofObs{prize, own_bid, compare_bids(own_bid, opp_bid)};
  r.opp_bid = opp_bid;
  return r;
}

Goofspiel::Goofspiel(GoofSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  own_missing_ = missing_card(spec_.k, spec_.own_hand, "own_hand");
  prize_missing_ = missing_card(spec_.k, spec_.prize_deck, "prize_deck");
  opp_missing_ = missing_card(spec_.k, spec_.opp_hand, "opp_hand");
}

Goofspiel::State Goofspiel::sample_initial(RngStream& rng) const {
  State s;
  s.opp_missing = static_cast<std::int8_t>(
      spec_.hidden_opponent_hand ? static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec_.k)))
                                 : opp_missing_);
  return s;
}

Transition<Goofspiel::State, Goofspiel::Obs> Goofspiel::step(const State& s, RngStream& rng) const {
  const GoofStepResult r = goof_step(spec_, s, rng);
  return {r.next, r.obs};
}

Propagated<Goofspiel::State> Goofspiel::propagate(const State& s, const Obs& y, RngStream& rng) const {
  const int t = s.round;
  if (t >= spec_.rounds()) throw std::invalid_argument("Goofspiel::propagate: state is terminal");
  const auto n = static_cast<std::size_t>(t);
  const std::vector<int> prizes = remaining_cards(spec_.k, prize_missing_, std::span(s.prizes).first(n));
  const std::vector<int> own = remaining_cards(spec_.k, own_missing_, std::span(s.own_bids).first(n));
  const std::vector<int> opp = remaining_cards(spec_.k, s.opp_missing, std::span(s.opp_bids).first(n));
  Propagated<State> out{s, kLogZero};
  out.next.round = static_cast<std::int8_t>(t + 1);
  out.next.prizes[n] = static_cast<std::int8_t>(y.prize);
  out.next.own_bids[n] = static_cast<std::int8_t>(y.own_bid);
  const int opp_bid = opp[rng.categorical(goof_policy_probs(spec_.k, opp, y.prize, spec_.opp_policy))];
  out.next.opp_bids[n] = static_cast<std::int8_t>(opp_bid);
  if (!contains(prizes, y.prize)) return out;
  const double p_own = card_prob(spec_.k, own, y.own_bid, y.prize, spec_.own_policy);
  if (p_own <= 0.0 || compare_bids(y.own_bid, opp_bid) != y.outcome) return out;
  out.log_weight = std::log(p_own) - std::log(static_cast<double>(prizes.size()));
  return out;
}

int Goofspiel::state_dim() const noexcept { return spec_.rounds() + (spec_.hidden_opponent_hand ? 1 : 0); }

void Goofspiel::encode(const State& s, std::span<double> out) const {
  std::size_t j = 0;
  if (spec_.hidden_opponent_hand) out[j++] = s.opp_missing;
  for (int r = 0; r < spec_.rounds(); ++r) out[j++] = r < s.round ? s.opp_bids[static_cast<std::size_t>(r)] : -1.0;
}

Decoded<Goofspiel::State> Goofspiel::decode(std::span<const double> code, const State& anchor) const {
  const int k = spec_.k;
  const int t = anchor.round;
  const std::size_t off = spec_.hidden_opponent_hand ? 1 : 0;
  auto cell = [](double v) {
    if (!std::isfinite(v)) return -1000;
    return static_cast<int>(std::clamp(std::floor(v), -1000.0, 1000.0));
  };

  Decoded<State> d;
  d.state = anchor;
  d.state.opp_missing = anchor.opp_missing;
  int missing = spec_.hidden_opponent_hand ? cell(code[0]) : anchor.opp_missing;
  bool legal = missing >= 0 && missing < k;
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  if (legal) used[static_cast<std::size_t>(missing)] = 1;
  for (int r = 0; r < t && legal; ++r) {
    const int b = cell(code[off + static_cast<std::size_t>(r)]);
    legal = b >= 0 && b < k && used[static_cast<std::size_t>(b)] == 0;
    if (legal) {
      used[static_cast<std::size_t>(b)] = 1;
      d.state.opp_bids[static_cast<std::size_t>(r)] = static_cast<std::int8_t>(b);
    }
  }
  if (legal) {
    d.state.opp_missing = static_cast<std::int8_t>(missing);
    return d;
  }

  // Nearest legal hidden part by exhaustive search over (missing, bids).
  d.clamped = true;
  auto sq = [](double v, int c) {
    const double diff = std::isfinite(v) ? v - (c + 0.5) : 0.0;
    return diff * diff;
  };
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> taken(static_cast<std::size_t>(k), 0);
  State cur = anchor;
  auto search = [&](auto&& self, int r, double dist) -> void {
    if (dist >= best) return;
    if (r == t) {
      best = dist;
      d.state = cur;
      return;
    }
    for (int c = 0; c < k; ++c) {
      if (taken[static_cast<std::size_t>(c)] != 0) continue;
      taken[static_cast<std::size_t>(c)] = 1;
      cur.opp_bids[static_cast<std::size_t>(r)] = static_cast<std::int8_t>(c);
      self(self, r + 1, dist + sq(code[off + static_cast<std::size_t>(r)], c));
      taken[static_cast<std::size_t>(c)] = 0;
    }
  };
  const int lo = spec_.hidden_opponent_hand ? 0 : anchor.opp_missing;
  const int hi = spec_.hidden_opponent_hand ? k - 1 : anchor.opp_missing;
  for (int m = lo; m <= hi; ++m) {
    cur.opp_missing = static_cast<std::int8_t>(m);
    taken[static_cast<std::size_t>(m)] = 1;
    search(search, 0, spec_.hidden_opponent_hand ? sq(code[0], m) : 0.0);
    taken[static_cast<std::size_t>(m)] = 0;
  }
  return d;
}

std::vector<std::pair<Goofspiel::State, double>> Goofspiel::initial_distribution() const {
  std::vector<std::pair<State, double>> out;
  if (!spec_.hidden_opponent_hand) {
    State s;
    s.opp_missing = static_cast<std::int8_t>(opp_missing_);
    out.emplace_back(s, 1.0);
    return out;
  }
  for (int m = 0; m < spec_.k; ++m) {
    State s;
    s.opp_missing = static_cast<std::int8_t>(m);
    out.emplace_back(s, 1.0 / spec_.k);
  }
  return out;
}

std::vector<std::pair<Goofspiel::State, double>> Goofspiel::successors(const State& s, const Obs& y) const {
  std::vector<std::pair<State, double>> out;
  const int t = s.round;
  if (t >= spec_.rounds()) throw std::invalid_argument("Goofspiel::successors: state is terminal");
  const auto n = static_cast<std::size_t>(t);
  const std::vector<int> prizes = remaining_cards(spec_.k, prize_missing_, std::span(s.prizes).first(n));
  if (!contains(prizes, y.prize)) return out;
  const std::vector<int> own = remaining_cards(spec_.k, own_missing_, std::span(s.own_bids).first(n));
  const double p_public =
      card_prob(spec_.k, own, y.own_bid, y.prize, spec_.own_policy) / static_cast<double>(prizes.size());
  if (p_public <= 0.0) return out;
  const std::vector<int> opp = remaining_cards(spec_.k, s.opp_missing, std::span(s.opp_bids).first(n));
  const std::vector<double> probs = goof_policy_probs(spec_.k, opp, y.prize, spec_.opp_policy);
  for (std::size_t i = 0; i < opp.size(); ++i) {
    if (probs[i] <= 0.0 || compare_bids(y.own_bid, opp[i]) != y.outcome) continue;
    State next = s;
    next.round = static_cast<std::int8_t>(t + 1);
    next.prizes[n] = static_cast<std::int8_t>(y.prize);
    next.own_bids[n] = static_cast<std::int8_t>(y.own_bid);
    next.opp_bids[n] = static_cast<std::int8_t>(opp[i]);
    out.emplace_back(next, p_public * probs[i]);
  }
  return out;
}

double Goofspiel::domain_bound(int t) const noexcept {
  double bound = spec_.hidden_opponent_hand ? spec_.k : 1.0;
  for (int i = 0; i < t; ++i) bound *= spec_.rounds() - i;
  return bound;
}

}  // namespace nbf::envs
