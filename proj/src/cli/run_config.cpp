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

#include "nbf/cli/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "nbf/beliefmodel/yaml_fields.hpp"
#include "nbf/cli/experiment.hpp"

namespace nbf::cli {

using beliefmodel::field;
using beliefmodel::line_of;
using beliefmodel::ModelConfig;
using beliefmodel::PriorKind;
using beliefmodel::read_mapping;
using beliefmodel::TransformKind;
using numkit::OptimizerKind;

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kGrid:
      return "grid";
    case EnvKind::kGoofspiel:
      return "goofspiel";
    case EnvKind::kTriangulation:
      return "triangulation";
    case EnvKind::kDonuts:
      return "donuts";
  }
  return "grid";
}

std::string_view to_string(Condition condition) { return condition == Condition::kRandom ? "random" : "fixed"; }

namespace {

EnvKind parse_env_kind(const std::string& s) {
  for (EnvKind k : {EnvKind::kGrid, EnvKind::kGoofspiel, EnvKind::kTriangulation, EnvKind::kDonuts}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown env kind '" + s + "'");
}

Condition parse_condition(const std::string& s) {
  if (s == "fixed") return Condition::kFixed;
  if (s == "random" || s == "randomized") return Condition::kRandom;
  throw std::invalid_argument("unknown condition '" + s + "'");
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::vector<evalharness::FilterSpec> read_roster(const YAML::Node& n) {
  if (n.IsSequence()) {
    std::vector<evalharness::FilterSpec> out;
    std::string joined;
    for (const auto& item : n) joined += (joined.empty() ? "" : ",") + item.as<std::string>();
    return joined.empty() ? out : evalharness::parse_roster(joined);
  }
  const auto s = n.as<std::string>();
  if (s.empty()) return {};
  return evalharness::parse_roster(s);
}

std::string roster_string(const std::vector<evalharness::FilterSpec>& roster) {
  std::string s;
  for (const auto& f : roster) s += (s.empty() ? "" : ",") + f.label();
  return s;
}

ModelConfig default_model(EnvKind kind) {
  ModelConfig m;
  switch (kind) {
    case EnvKind::kGrid:
      m.embedding_dim = 32;
      m.embed_units = 128;
      m.embed_layers = 3;
      m.dequant_units = 32;
      m.dequant_layers = 2;
      m.flow_units = 32;
      m.flow_layers = 5;
      m.coupling_layers = 5;
      m.transform = TransformKind::kAffine;
      m.prior = PriorKind::kUniform;
      m.dequantize = true;
      break;
    case EnvKind::kGoofspiel:
      m.embedding_dim = 48;
      m.embed_units = 128;
      m.embed_layers = 3;
      m.dequant_units = 48;
      m.dequant_layers = 2;
      m.flow_units = 128;
      m.flow_layers = 4;
      m.coupling_layers = 8;
      m.transform = TransformKind::kNlsq;
      m.prior = PriorKind::kStandardNormal;
      m.dequantize = true;
      break;
    case EnvKind::kTriangulation:
      m.embedding_dim = 32;
      m.embed_units = 128;
      m.embed_layers = 3;
      m.flow_units = 64;
      m.flow_layers = 2;
      m.coupling_layers = 6;
      m.transform = TransformKind::kAffine;
      m.prior = PriorKind::kStandardNormal;
      m.dequantize = false;
      break;
    case EnvKind::kDonuts:
      m.state_dim = 2;
      m.embedding_dim = 8;
      m.embed_units = 64;
      m.embed_layers = 3;
      m.flow_units = 32;
      m.flow_layers = 3;
      m.coupling_layers = 8;
      m.transform = TransformKind::kAffine;
      m.prior = PriorKind::kStandardNormal;
      m.dequantize = false;
      break;
  }
  return m;
}

beliefmodel::TrainConfig default_train(EnvKind kind) {
  beliefmodel::TrainConfig t;
  switch (kind) {
    case EnvKind::kGrid:
      t.batch_size = 32;
      t.training_steps = 100000;
      t.samples_per_distribution = 64;
      t.optimizer = OptimizerKind::kAdagrad;
      t.learning_rate = 0.1;
      break;
    case EnvKind::kGoofspiel:
      t.batch_size = 64;
      t.training_steps = 150000;
      t.samples_per_distribution = 64;
      t.optimizer = OptimizerKind::kNadam;
      t.learning_rate = 1e-3;
      break;
    case EnvKind::kTriangulation:
      t.batch_size = 32;
      t.training_steps = 30000;
      t.samples_per_distribution = 64;
      t.optimizer = OptimizerKind::kAdam;
      t.learning_rate = 1e-3;
      break;
    case EnvKind::kDonuts:
      t.batch_size = 32;
      t.training_steps = 30000;
      t.samples_per_distribution = 128;
      t.optimizer = OptimizerKind::kAdam;
      t.learning_rate = 1e-3;
      break;
  }
  return t;
}

const char* default_eval_roster(EnvKind kind) {
  switch (kind) {
    case EnvKind::kGrid:
    case EnvKind::kGoofspiel:
      return "pf:32,pf:128,nbf:32,approx:32";
    case EnvKind::kTriangulation:
      return "pf:16,pf:64,pf:256,nbf:16,approx:32";
    case EnvKind::kDonuts:
      return "";
  }
  return "";
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what, 0);
}

}  // namespace

RunConfig default_run_config(EnvKind kind) {
  return parse_run_config("env:\n  kind: " + std::string(to_string(kind)) + "\n");
}

void resolve(RunConfig& c) {
  const EnvKind kind = c.env.kind;
  if (kind == EnvKind::kGrid) {
    GridEnvConfig& g = c.env.grid;
    if (g.obstacles == 0 && g.obstacle_width == 0) {
      check(g.size == 5 || g.size == 8, "grid obstacles and obstacle_width must be given for sizes other than 5 and 8");
      g.obstacles = g.size == 5 ? 1 : 2;
      g.obstacle_width = g.size == 5 ? 2 : 3;
    }
    check(g.obstacles >= 0 && g.obstacle_width >= 1, "grid obstacles must be >= 0 and obstacle_width >= 1");
    check(g.temperature > 0.0, "grid temperature must be positive");
  }
  int natural_steps = 20;
  if (kind == EnvKind::kGoofspiel) natural_steps = c.env.goofspiel.k - 1;
  if (kind == EnvKind::kTriangulation) natural_steps = c.env.triangulation.episode_length;
  if (c.eval.steps == 0) c.eval.steps = natural_steps;
  if (c.bench.steps == 0) c.bench.steps = c.eval.steps;
  if (c.train.max_depth == 0) c.train.max_depth = c.eval.steps;
  check(c.eval.steps >= 1 && c.bench.steps >= 1, "steps must be >= 1");
  if (kind == EnvKind::kGoofspiel) {
    check(c.eval.steps <= natural_steps && c.bench.steps <= natural_steps,
          "goofspiel steps cannot exceed k - 1 rounds");
  }
  check(c.train.max_depth >= 0, "train max_depth must be >= 0");
  check(c.train.pool_episodes >= 1, "train pool_episodes must be >= 1");
  check(c.eval.episodes >= 2, "eval episodes must be >= 2");
  check(c.eval.model_samples >= 1, "eval model_samples must be >= 1");
  check(c.eval.reference_particles >= 1, "eval reference_particles must be >= 1");
  check(c.eval.grid_cells >= 1, "eval grid_cells must be >= 1");
  check(c.eval.retry_limit >= 0, "eval retry_limit must be >= 0");
  check(c.bench.reps >= 100, "bench reps must be >= 100");
  for (const auto& f : c.bench.roster) {
    check(f.kind != evalharness::FilterKind::kApprox, "bench roster cannot contain approx");
    check(!(f.kind == evalharness::FilterKind::kOracle && kind == EnvKind::kTriangulation),
          "no exact oracle to bench for triangulation");
  }

  // Building an instance surfaces environment errors early and gives the
  // state dimension.
  try {
    c.model.state_dim = Experiment(c.env).state_dim();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("env: ") + e.what(), 0);
  }
  if (c.model.prior == PriorKind::kUniform && c.model.domain_low.empty() && c.model.domain_high.empty()) {
    const auto d = static_cast<std::size_t>(c.model.state_dim);
    if (kind == EnvKind::kGrid) {
      c.model.domain_low.assign(d, 0.0);
      c.model.domain_high.assign(d, c.env.grid.size);
    } else if (kind == EnvKind::kGoofspiel) {
      c.model.domain_low.assign(d, -1.0);
      c.model.domain_high.assign(d, c.env.goofspiel.k);
    } else if (kind == EnvKind::kTriangulation) {
      const double h = envs::TriSpec{}.half_width;
      c.model.domain_low.assign(d, -h);
      c.model.domain_high.assign(d, h);
    }
  }
  try {
    c.model.validate();
    c.train.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0);
  }
}

RunConfig run_config_from_yaml(const YAML::Node& root) {
  if (root && !root.IsNull() && !root.IsMap()) throw ConfigError("config must be a mapping", line_of(root));
  EnvKind kind = EnvKind::kGrid;
  const YAML::Node env = root ? root["env"] : YAML::Node();
  if (env && env.IsMap() && env["kind"]) {
    try {
      kind = parse_env_kind(env["kind"].as<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad value for 'kind': ") + e.what(), line_of(env["kind"]));
    }
  }
  RunConfig c;
  c.env.kind = kind;
  c.model = default_model(kind);
  c.train.config = default_train(kind);
  c.train.max_depth = 0;
  c.eval.roster = kind == EnvKind::kDonuts ? std::vector<evalharness::FilterSpec>{}
                                           : evalharness::parse_roster(default_eval_roster(kind));
  c.eval.steps = 0;
  c.bench.roster = evalharness::parse_roster("pf:32,pf:128");
  c.bench.steps = 0;

  YAML::Node model_node;
  int state_dim_line = -1;
  const auto roster_reader = [](std::vector<evalharness::FilterSpec>& out) {
    return [&out](const YAML::Node& n) { out = read_roster(n); };
  };
  read_mapping(
      root,
      {
          {"env",
           [&](const YAML::Node& n) {
             GridEnvConfig& g = c.env.grid;
             GoofEnvConfig& k = c.env.goofspiel;
             TriEnvConfig& t = c.env.triangulation;
             read_mapping(n,
                          {
                              {"kind", [](const YAML::Node&) {}},
                              {"condition", [&](const YAML::Node& v) { c.env.condition = parse_condition(v.as<std::string>()); }},
                              {"layout_seed", field(c.env.layout_seed)},
                              {"grid",
                               [&](const YAML::Node& v) {
                                 read_mapping(v,
                                              {{"dim", field(g.dim)},
                                               {"size", field(g.size)},
                                               {"obs_flip_prob", field(g.obs_flip_prob)},
                                               {"temperature", field(g.temperature)},
                                               {"obstacles", field(g.obstacles)},
                                               {"obstacle_width", field(g.obstacle_width)},
                                               {"observe_direction", field(g.observe_direction)},
                                               {"direction_error", field(g.direction_error)}},
                                              "env.grid");
                               }},
                              {"goofspiel",
                               [&](const YAML::Node& v) {
                                 read_mapping(v,
                                              {{"k", field(k.k)},
                                               {"own_beta", field(k.own_beta)},
                                               {"opp_beta", field(k.opp_beta)},
                                               {"hidden_opponent_hand", field(k.hidden_opponent_hand)}},
                                              "env.goofspiel");
                               }},
                              {"triangulation",
                               [&](const YAML::Node& v) {
                                 read_mapping(v,
                                              {{"sigma_move", field(t.sigma_move)},
                                               {"sigma_scan", field(t.sigma_scan)},
                                               {"episode_length", field(t.episode_length)},
                                               {"scan_prob_low", field(t.scan_prob_low)},
                                               {"scan_prob_high", field(t.scan_prob_high)}},
                                              "env.triangulation");
                               }},
                          },
                          "env");
           }},
          {"model",
           [&](const YAML::Node& n) {
             model_node = n;
             if (n.IsMap() && n["state_dim"]) state_dim_line = line_of(n["state_dim"]);
           }},
          {"train",
           [&](const YAML::Node& n) {
             beliefmodel::TrainConfig& t = c.train.config;
             read_mapping(n,
                          {
                              {"batch_size", field(t.batch_size)},
                              {"training_steps", field(t.training_steps)},
                              {"samples_per_distribution", field(t.samples_per_distribution)},
                              {"optimizer",
                               [&](const YAML::Node& v) { t.optimizer = numkit::parse_optimizer(v.as<std::string>()); }},
                              {"learning_rate", field(t.learning_rate)},
                              {"seed", field(t.seed)},
                              {"max_depth", field(c.train.max_depth)},
                              {"pool_episodes", field(c.train.pool_episodes)},
                          },
                          "train");
           }},
          {"eval",
           [&](const YAML::Node& n) {
             EvalSection& e = c.eval;
             read_mapping(n,
                          {
                              {"roster", roster_reader(e.roster)},
                              {"episodes", field(e.episodes)},
                              {"steps", field(e.steps)},
                              {"seed", field(e.seed)},
                              {"model_samples", field(e.model_samples)},
                              {"reference_particles", field(e.reference_particles)},
                              {"grid_cells", field(e.grid_cells)},
                              {"retry_limit", field(e.retry_limit)},
                          },
                          "eval");
           }},
          {"bench",
           [&](const YAML::Node& n) {
             BenchSection& b = c.bench;
             read_mapping(n,
                          {
                              {"roster", roster_reader(b.roster)},
                              {"reps", field(b.reps)},
                              {"steps", field(b.steps)},
                              {"seed", field(b.seed)},
                          },
                          "bench");
           }},
      },
      "config");

  if (model_node) {
    const ModelConfig before = c.model;
    c.model = beliefmodel::model_config_from_yaml(model_node, c.model);
    if (state_dim_line >= 0) {
      const int given = c.model.state_dim;
      c.model.state_dim = before.state_dim;
      RunConfig probe = c;
      resolve(probe);
      if (given != probe.model.state_dim) {
        throw ConfigError("model state_dim " + std::to_string(given) + " does not match the environment (" +
                              std::to_string(probe.model.state_dim) + ")",
                          state_dim_line);
      }
    }
  }
  resolve(c);
  return c;
}

RunConfig parse_run_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("syntax error: " + e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  return run_config_from_yaml(root);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_yaml(const RunConfig& c) {
  std::ostringstream out;
  const auto indent = [](const std::string& block, const char* pad) {
    std::string s;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) s += pad + line + '\n';
    return s;
  };
  const auto b = [](bool v) { return v ? "true" : "false"; };
  const GridEnvConfig& g = c.env.grid;
  const GoofEnvConfig& k = c.env.goofspiel;
  const TriEnvConfig& t = c.env.triangulation;
  out << "env:\n"
      << "  kind: " << to_string(c.env.kind) << '\n'
      << "  condition: " << to_string(c.env.condition) << '\n'
      << "  layout_seed: " << c.env.layout_seed << '\n'
      << "  grid:\n"
      << "    dim: " << g.dim << '\n'
      << "    size: " << g.size << '\n'
      << "    obs_flip_prob: " << shortest(g.obs_flip_prob) << '\n'
      << "    temperature: " << shortest(g.temperature) << '\n'
      << "    obstacles: " << g.obstacles << '\n'
      << "    obstacle_width: " << g.obstacle_width << '\n'
      << "    observe_direction: " << b(g.observe_direction) << '\n'
      << "    direction_error: " << shortest(g.direction_error) << '\n'
      << "  goofspiel:\n"
      << "    k: " << k.k << '\n'
      << "    own_beta: " << shortest(k.own_beta) << '\n'
      << "    opp_beta: " << shortest(k.opp_beta) << '\n'
      << "    hidden_opponent_hand: " << b(k.hidden_opponent_hand) << '\n'
      << "  triangulation:\n"
      << "    sigma_move: " << shortest(t.sigma_move) << '\n'
      << "    sigma_scan: " << shortest(t.sigma_scan) << '\n'
      << "    episode_length: " << t.episode_length << '\n'
      << "    scan_prob_low: " << shortest(t.scan_prob_low) << '\n'
      << "    scan_prob_high: " << shortest(t.scan_prob_high) << '\n'
      << "model:\n"
      << indent(beliefmodel::to_yaml(c.model), "  ") << "train:\n"
      << indent(beliefmodel::to_yaml(c.train.config), "  ") << "  max_depth: " << c.train.max_depth << '\n'
      << "  pool_episodes: " << c.train.pool_episodes << '\n'
      << "eval:\n"
      << "  roster: \"" << roster_string(c.eval.roster) << "\"\n"
      << "  episodes: " << c.eval.episodes << '\n'
      << "  steps: " << c.eval.steps << '\n'
      << "  seed: " << c.eval.seed << '\n'
      << "  model_samples: " << c.eval.model_samples << '\n'
      << "  reference_particles: " << c.eval.reference_particles << '\n'
      << "  grid_cells: " << c.eval.grid_cells << '\n'
      << "  retry_limit: " << c.eval.retry_limit << '\n'
      << "bench:\n"
      << "  roster: \"" << roster_string(c.bench.roster) << "\"\n"
      << "  reps: " << c.bench.reps << '\n'
      << "  steps: " << c.bench.steps << '\n'
      << "  seed: " << c.bench.seed << '\n';
  return out.str();
}

}  // namespace nbf::cli
