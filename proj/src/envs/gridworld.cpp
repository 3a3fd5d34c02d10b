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

#include "nbf/envs/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace nbf::envs {

namespace {

std::string cell_string(const GridCell& c, int dim) {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i > 0) s += ",";
    s += std::to_string(c[static_cast<std::size_t>(i)]);
  }
  return s + ")";
}

}  // namespace

int GridSpec::num_cells() const noexcept {
  int n = 1;
  for (int i = 0; i < dim; ++i) n *= side;
  return n;
}

bool GridSpec::in_bounds(const GridCell& c) const noexcept {
  for (int i = 0; i < dim; ++i) {
    if (c[static_cast<std::size_t>(i)] < 0 || c[static_cast<std::size_t>(i)] >= side) return false;
  }
  for (int i = dim; i < 3; ++i) {
    if (c[static_cast<std::size_t>(i)] != 0) return false;
  }
  return true;
}

bool GridSpec::blocked(const GridCell& c) const noexcept {
  for (const Obstacle& o : obstacles) {
    bool inside = true;
    for (int i = 0; i < dim && inside; ++i) {
      const auto k = static_cast<std::size_t>(i);
      inside = c[k] >= o.corner[k] && c[k] < o.corner[k] + o.width;
    }
    if (inside) return true;
  }
  return false;
}

int GridSpec::cell_index(const GridCell& c) const noexcept {
  return c[0] + side * (c[1] + side * c[2]);
}

GridCell GridSpec::cell_at(int index) const noexcept {
  GridCell c{};
  c[0] = index % side;
  c[1] = dim > 1 ? (index / side) % side : 0;
  c[2] = dim > 2 ? index / (side * side) : 0;
  return c;
}

std::vector<GridCell> GridSpec::free_cells() const {
  std::vector<GridCell> out;
  for (int i = 0; i < num_cells(); ++i) {
    const GridCell c = cell_at(i);
    if (!blocked(c)) out.push_back(c);
  }
  return out;
}

bool GridSpec::free_region_connected() const {
  const std::vector<GridCell> cells = free_cells();
  if (cells.empty()) return false;
  std::vector<char> seen(static_cast<std::size_t>(num_cells()), 0);
  std::deque<GridCell> queue{cells.front()};
  seen[static_cast<std::size_t>(cell_index(cells.front()))] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const GridCell c = queue.front();
    queue.pop_front();
    ++reached;
    for (int a = 0; a < num_actions(); ++a) {
      const GridCell n = intended_next(c, a);
      if (!is_free(n)) continue;
      char& flag = seen[static_cast<std::size_t>(cell_index(n))];
      if (flag == 0) {
        flag = 1;
        queue.push_back(n);
      }
    }
  }
  return reached == cells.size();
}

void GridSpec::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3, got " + std::to_string(dim));
  if (side < 1) throw std::invalid_argument("grid side must be positive");
  if (!(obs_flip_prob >= 0.0 && obs_flip_prob < 0.5)) {
    throw std::invalid_argument("obs_flip_prob must lie in [0, 0.5)");
  }
  if (observe_direction && !(direction_error >= 0.0 && direction_error < 1.0)) {
    throw std::invalid_argument("direction_error must lie in [0, 1)");
  }
  for (const Obstacle& o : obstacles) {
    if (o.width < 1) throw std::invalid_argument("obstacle width must be positive");
    for (int i = 0; i < 3; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const bool ok = i < dim ? (o.corner[k] >= 0 && o.corner[k] + o.width <= side) : o.corner[k] == 0;
      if (!ok) {
        throw std::invalid_argument("obstacle at " + cell_string(o.corner, dim) + " with width " +
                                    std::to_string(o.width) + " leaves the grid");
      }
    }
  }
  if (free_cells().empty()) throw std::invalid_argument("grid has no free cell");
  if (!free_region_connected()) throw std::invalid_argument("free cells are not connected");
}

GridCell intended_next(const GridCell& c, int action) noexcept {
  GridCell n = c;
  n[static_cast<std::size_t>(action / 2)] += (action % 2 == 0) ? 1 : -1;
  return n;
}

int manhattan(const GridCell& a, const GridCell& b, int dim) noexcept {
  int d = 0;
  for (int i = 0; i < dim; ++i) d += std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
  return d;
}

std::vector<double> grid_policy_probs(const GridSpec& spec, const GridPolicy& policy,
                                      const GridState& s) {
  const int n = spec.num_actions();
  std::vector<double> p(static_cast<std::size_t>(n), 1.0 / n);
  if (policy.fixed_action >= 0) {
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(policy.fixed_action)] = 1.0;
    return p;
  }
  if (std::isinf(policy.temperature)) return p;
  std::vector<double> logits(p.size());
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    const int d = manhattan(intended_next(s.cell, a), policy.goal, spec.dim);
    logits[static_cast<std::size_t>(a)] = -static_cast<double>(d) / policy.temperature;
    best = std::max(best, logits[static_cast<std::size_t>(a)]);
  }
  double z = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    p[a] = std::exp(logits[a] - best);
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

GridStepResult grid_step(const GridSpec& spec, const GridPolicy& policy, const GridState& s,
                         RngStream& rng) {
  const std::vector<double> probs = grid_policy_probs(spec, policy, s);
  GridStepResult r;
  r.action = static_cast<int>(rng.categorical(probs));
  const GridCell target = intended_next(s.cell, r.action);
  const bool hit = !spec.is_free(target);
  r.next.cell = hit ? s.cell : target;
  r.obs.hit_wall = hit;
  if (spec.obs_flip_prob > 0.0 && rng.uniform() < spec.obs_flip_prob) r.obs.hit_wall = !hit;
  if (spec.observe_direction) {
    r.obs.direction = r.action;
    if (spec.direction_error > 0.0 && rng.uniform() < spec.direction_error) {
      const auto other = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_actions() - 1)));
      r.obs.direction = other >= r.action ? other + 1 : other;
    }
  }
  return r;
}

std::vector<GridSuccessor> grid_transition_support(const GridSpec& spec, const GridPolicy& policy,
                                                   const GridState& s) {
  const std::vector<double> probs = grid_policy_probs(spec, policy, s);
  std::vector<GridSuccessor> out;
  for (int a = 0; a < spec.num_actions(); ++a) {
    const double p = probs[static_cast<std::size_t>(a)];
    if (p <= 0.0) continue;
    const GridCell target = intended_next(s.cell, a);
    const bool hit = !spec.is_free(target);
    GridSuccessor succ;
    succ.next.cell = hit ? s.cell : target;
    succ.prob = p;
    succ.p_hit = hit ? 1.0 - spec.obs_flip_prob : spec.obs_flip_prob;
    succ.action = spec.observe_direction ? a : -1;
    auto same = std::find_if(out.begin(), out.end(), [&](const GridSuccessor& o) {
      return o.next == succ.next && o.p_hit == succ.p_hit && o.action == succ.action;
    });
    if (same != out.end()) {
      same->prob += p;
    } else {
      out.push_back(succ);
    }
  }
  return out;
}

double grid_emission_prob(const GridSpec& spec, const GridSuccessor& succ, const GridObs& obs) {
  double p = obs.hit_wall ? succ.p_hit : 1.0 - succ.p_hit;
  if (spec.observe_direction) {
    const double wrong = spec.direction_error / (spec.num_actions() - 1);
    p *= obs.direction == succ.action ? 1.0 - spec.direction_error : wrong;
  }
  return p;
}

GridSpec random_grid(int dim, int side, int num_obstacles, int width, double obs_flip_prob,
                     RngStream& rng) {
  if (width > side) throw std::invalid_argument("obstacle width exceeds grid side");
  for (int attempt = 0; attempt < 100000; ++attempt) {
    GridSpec spec;
    spec.dim = dim;
    spec.side = side;
    spec.obs_flip_prob = obs_flip_prob;
    for (int o = 0; o < num_obstacles; ++o) {
      Obstacle ob;
      ob.width = width;
      for (int i = 0; i < dim; ++i) {
        ob.corner[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(side - width + 1)));
      }
      spec.obstacles.push_back(ob);
    }
    if (!spec.free_cells().empty() && spec.free_region_connected()) return spec;
  }
  throw std::runtime_error("random_grid: no connected layout found");
}

GridPolicy random_policy(const GridSpec& spec, double temperature, RngStream& rng) {
  const std::vector<GridCell> cells = spec.free_cells();
  GridPolicy p;
  p.goal = cells[rng.uniform_int(cells.size())];
  p.temperature = temperature;
  return p;
}

Gridworld::Gridworld(GridSpec spec, GridPolicy policy) : spec_(std::move(spec)), policy_(policy) {
  spec_.validate();
  if (!spec_.is_free(policy_.goal)) throw std::invalid_argument("policy goal is not a free cell");
  if (!(policy_.temperature > 0.0)) throw std::invalid_argument("policy temperature must be positive");
  if (policy_.fixed_action >= spec_.num_actions()) throw std::invalid_argument("policy fixed_action out of range");
  table_index_.assign(static_cast<std::size_t>(spec_.num_cells()), -1);
  for (const GridCell& c : spec_.free_cells()) {
    GridState s{c};
    table_index_[static_cast<std::size_t>(spec_.cell_index(c))] = static_cast<int>(tables_.size());
    free_.push_back(s);
    CellTable t;
    t.probs = grid_policy_probs(spec_, policy_, s);
    for (int a = 0; a < spec_.num_actions(); ++a) {
      const GridCell target = intended_next(c, a);
      const bool hit = !spec_.is_free(target);
      t.next.push_back(GridState{hit ? c : target});
      t.hit.push_back(hit);
    }
    tables_.push_back(std::move(t));
  }
}

const Gridworld::CellTable& Gridworld::table(const State& s) const {
  const int idx = spec_.in_bounds(s.cell) ? table_index_[static_cast<std::size_t>(spec_.cell_index(s.cell))] : -1;
  if (idx < 0) throw std::invalid_argument("state " + cell_string(s.cell, spec_.dim) + " is not a free cell");
  return tables_[static_cast<std::size_t>(idx)];
}

std::span<const double> Gridworld::action_probs(const State& s) const { return table(s).probs; }

double Gridworld::emission(bool hit, int action, const Obs& y) const {
  double p = (y.hit_wall == hit) ? 1.0 - spec_.obs_flip_prob : spec_.obs_flip_prob;
  if (spec_.observe_direction) {
    p *= y.direction == action ? 1.0 - spec_.direction_error : spec_.direction_error / (spec_.num_actions() - 1);
  }
  return p;
}

Gridworld::State Gridworld::sample_initial(RngStream& rng) const { return free_[rng.uniform_int(free_.size())]; }

Transition<Gridworld::State, Gridworld::Obs> Gridworld::step(const State& s, RngStream& rng) const {
  const GridStepResult r = grid_step(spec_, policy_, s, rng);
  return {r.next, r.obs};
}

Propagated<Gridworld::State> Gridworld::propagate(const State& s, const Obs& y, RngStream& rng) const {
  const CellTable& t = table(s);
  const auto a = rng.categorical(t.probs);
  const double h = emission(t.hit[a], static_cast<int>(a), y);
  return {t.next[a], h > 0.0 ? std::log(h) : kLogZero};
}

void Gridworld::encode(const State& s, std::span<double> out) const {
  for (int i = 0; i < spec_.dim; ++i) out[static_cast<std::size_t>(i)] = s.cell[static_cast<std::size_t>(i)];
}

Decoded<Gridworld::State> Gridworld::decode(std::span<const double> code, const State&) const {
  Decoded<State> d;
  bool finite = true;
  for (int i = 0; i < spec_.dim; ++i) {
    const double v = code[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) {
      finite = false;
      continue;
    }
    const double f = std::floor(v);
    d.state.cell[static_cast<std::size_t>(i)] =
        f < -1e9 ? -1 : (f > 1e9 ? spec_.side : static_cast<int>(f));
  }
  if (finite && spec_.is_free(d.state.cell)) return d;
  d.clamped = true;
  double best = std::numeric_limits<double>::infinity();
  for (const GridState& s : free_) {
    double dist = 0.0;
    for (int i = 0; i < spec_.dim; ++i) {
      const double v = code[static_cast<std::size_t>(i)];
      const double diff = std::isfinite(v) ? v - (s.cell[static_cast<std::size_t>(i)] + 0.5) : 0.0;
      dist += diff * diff;
    }
    if (dist < best) {
      best = dist;
      d.state = s;
    }
  }
  return d;
}

std::vector<std::pair<Gridworld::State, double>> Gridworld::initial_distribution() const {
  std::vector<std::pair<State, double>> out;
  out.reserve(free_.size());
  for (const GridState& s : free_) out.emplace_back(s, 1.0 / static_cast<double>(free_.size()));
  return out;
}

std::vector<std::pair<Gridworld::State, double>> Gridworld::successors(const State& s, const Obs& y) const {
  const CellTable& t = table(s);
  std::vector<std::pair<State, double>> out;
  for (std::size_t a = 0; a < t.probs.size(); ++a) {
    const double w = t.probs[a] * emission(t.hit[a], static_cast<int>(a), y);
    if (w <= 0.0) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == t.next[a]; });
    if (it != out.end()) {
      it->second += w;
    } else {
      out.emplace_back(t.next[a], w);
    }
  }
  return out;
}

}  // namespace nbf::envs
