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

#include "nbf/cli/commands.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "nbf/beliefmodel/checkpoint.hpp"
#include "nbf/cli/experiment.hpp"
#include "nbf/evalharness/episode.hpp"

namespace nbf::cli {

namespace fs = std::filesystem;
using evalharness::FilterKind;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  evalharness::Fnv64 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.bytes(buf, static_cast<std::size_t>(in.gcount()));
  return h.digest();
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                    const CommandOptions& options, std::uint64_t seed, const std::vector<std::string>& outputs) {
  const fs::path path = dir / (command + ".manifest.yaml");
  std::ofstream out = open_out(path);
  out << "command: " << command << '\n'
      << "config_path: \"" << options.config_path << "\"\n"
      << "seed: " << seed << '\n';
  if (options.checkpoint) {
    out << "checkpoint: \"" << *options.checkpoint << "\"\n"
        << "checkpoint_fnv64: " << hex(file_digest(*options.checkpoint)) << '\n';
  }
  out << "js_log_base: e\n"
      << "outputs:\n";
  for (const auto& o : outputs) out << "  - " << o << '\n';
  out << "config:\n";
  std::istringstream body(to_yaml(config));
  std::string line;
  while (std::getline(body, line)) out << "  " << line << '\n';
  close_checked(out, path);
}

void say(const CommandOptions& o, const std::string& msg) {
  if (o.log != nullptr) *o.log << msg << std::endl;
}

bool roster_needs_model(const std::vector<evalharness::FilterSpec>& roster) {
  for (const auto& f : roster) {
    if (f.needs_model()) return true;
  }
  return false;
}

std::optional<beliefmodel::BeliefModel> load_model_for(const RunConfig& config,
                                                       const std::vector<evalharness::FilterSpec>& roster,
                                                       const CommandOptions& options) {
  if (!roster_needs_model(roster)) return std::nullopt;
  if (!options.checkpoint) throw ConfigError("roster contains nbf or approx filters but no --checkpoint was given", 0);
  beliefmodel::BeliefModel model = beliefmodel::load_checkpoint(*options.checkpoint);
  if (model.state_dim() != config.model.state_dim) {
    throw ConfigError("checkpoint state_dim " + std::to_string(model.state_dim()) + " does not match the " +
                          std::string(to_string(config.env.kind)) + " environment (" +
                          std::to_string(config.model.state_dim) + ")",
                      0);
  }
  return model;
}

evalharness::EvalOptions eval_options(const RunConfig& config, const beliefmodel::BeliefModel* model) {
  evalharness::EvalOptions opt;
  opt.steps = config.eval.steps;
  opt.model_samples = config.eval.model_samples;
  opt.reference_particles = config.eval.reference_particles;
  const double h = config.env.kind == EnvKind::kTriangulation ? envs::TriSpec{}.half_width : 5.0;
  opt.grid = {{-h, -h}, {h, h}, config.eval.grid_cells};
  opt.model = model;
  opt.retry_limit = config.eval.retry_limit;
  return opt;
}

/// Runs fn(i) for i in [0, n) on `workers` threads and rethrows the first
/// failure by index.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(workers, n));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string env_label(const EnvConfig& env) {
  switch (env.kind) {
    case EnvKind::kGrid:
      return "grid-" + std::to_string(env.grid.size) + "-" + std::to_string(env.grid.dim) + "d";
    case EnvKind::kGoofspiel:
      return "goofspiel-" + std::to_string(env.goofspiel.k);
    case EnvKind::kTriangulation:
      return "triangulation";
    case EnvKind::kDonuts:
      return "donuts";
  }
  return "unknown";
}

beliefmodel::TrainResult cmd_train(RunConfig config, const CommandOptions& options) {
  if (options.seed) config.train.config.seed = *options.seed;
  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  const auto& tc = config.train.config;
  say(options, "training " + env_label(config.env) + " for " + std::to_string(tc.training_steps) + " steps");
  const auto source = training_source(config);
  const int every = std::max(1, tc.training_steps / 20);
  auto result = beliefmodel::train(config.model, source, tc, [&](int step, double loss) {
    if ((step + 1) % every == 0) {
      say(options, "  step " + std::to_string(step + 1) + " loss " + evalharness::format_double(loss));
    }
  });
  beliefmodel::save_checkpoint((dir / kCheckpointFile).string(), result.model);
  {
    const fs::path path = dir / kLossFile;
    std::ofstream out = open_out(path);
    out << "step,loss\n";
    for (std::size_t i = 0; i < result.losses.size(); ++i) {
      out << i << ',' << evalharness::format_double(result.losses[i]) << '\n';
    }
    close_checked(out, path);
  }
  CommandOptions echo = options;
  echo.checkpoint.reset();
  write_manifest(dir, "train", config, echo, tc.seed, {kCheckpointFile, kLossFile});
  return result;
}

EvalOutcome cmd_eval(RunConfig config, const CommandOptions& options) {
  if (options.seed) config.eval.seed = *options.seed;
  if (config.env.kind == EnvKind::kDonuts) throw ConfigError("donuts have no filtering evaluation", 0);
  if (config.eval.roster.empty()) throw ConfigError("eval roster is empty", 0);
  const auto model = load_model_for(config, config.eval.roster, options);
  const Experiment exp(config.env);
  const auto opt = eval_options(config, model ? &*model : nullptr);
  const auto& roster = config.eval.roster;
  const int episodes = config.eval.episodes;
  const std::uint64_t seed = config.eval.seed;
  say(options, "evaluating " + std::to_string(episodes) + " episodes of " + env_label(config.env));

  std::vector<evalharness::EpisodeResult> results(static_cast<std::size_t>(episodes));
  std::mutex log_mu;
  int done = 0;
  parallel_for(episodes, options.workers, [&](int e) {
    const numkit::RngStream ep = evalharness::episode_stream(seed, e);
    numkit::RngStream env_rng = ep.split(0);
    const AnyEnv env = exp.instance(env_rng);
    results[static_cast<std::size_t>(e)] =
        std::visit([&](const auto& instance) { return evalharness::run_episode(instance, roster, opt, ep); }, env);
    const std::lock_guard<std::mutex> lock(log_mu);
    ++done;
    if (done % std::max(1, episodes / 10) == 0) say(options, "  " + std::to_string(done) + " episodes done");
  });

  EvalOutcome outcome;
  const std::string label = env_label(config.env);
  const std::string condition(to_string(config.env.condition));
  for (int e = 0; e < episodes; ++e) {
    evalharness::append_rows(outcome.rows, results[static_cast<std::size_t>(e)], roster, label, condition, seed, e);
  }
  outcome.series = evalharness::aggregate(outcome.rows);

  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  {
    const fs::path path = dir / kEpisodeFile;
    std::ofstream out = open_out(path);
    evalharness::write_episode_csv(out, outcome.rows);
    close_checked(out, path);
  }
  {
    const fs::path path = dir / kAggregateFile;
    std::ofstream out = open_out(path);
    evalharness::write_aggregate_csv(out, outcome.series);
    close_checked(out, path);
  }
  CommandOptions echo = options;
  if (!model) echo.checkpoint.reset();
  write_manifest(dir, "eval", config, echo, seed, {kEpisodeFile, kAggregateFile});
  return outcome;
}

std::vector<evalharness::BenchRow> cmd_bench(RunConfig config, const CommandOptions& options) {
  if (options.seed) config.bench.seed = *options.seed;
  if (config.env.kind == EnvKind::kDonuts) throw ConfigError("donuts have no filter to benchmark", 0);
  if (config.bench.roster.empty()) throw ConfigError("bench roster is empty", 0);
  const auto model = load_model_for(config, config.bench.roster, options);
  const Experiment exp(config.env);
  auto opt = eval_options(config, model ? &*model : nullptr);
  opt.steps = config.bench.steps;
  numkit::RngStream env_rng(config.bench.seed, 0x42454e56);  // "BENV"
  const AnyEnv env = exp.instance(env_rng);

  std::vector<evalharness::BenchRow> rows;
  for (const auto& f : config.bench.roster) {
    say(options, "benchmarking " + f.label());
    const auto report = std::visit(
        [&](const auto& instance) {
          return evalharness::bench_filter(instance, f, opt, config.bench.reps, config.bench.seed);
        },
        env);
    rows.push_back({env_label(config.env), f.label(), report});
  }
  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  const fs::path path = dir / kBenchFile;
  std::ofstream out = open_out(path);
  evalharness::write_bench_csv(out, rows);
  close_checked(out, path);
  CommandOptions echo = options;
  if (!model) echo.checkpoint.reset();
  write_manifest(dir, "bench", config, echo, config.bench.seed, {kBenchFile});
  return rows;
}

void cmd_gen_fixtures(const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  // JS divergence of two-point distributions from the definition.
  {
    const fs::path path = dir / "js_examples.csv";
    std::ofstream out = open_out(path);
    out << "p0,p1,q0,q1,js\n";
    const double cases[][4] = {{0.5, 0.5, 1.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, {0.3, 0.7, 0.3, 0.7}, {0.9, 0.1, 0.2, 0.8}};
    for (const auto& c : cases) {
      double js = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double m = 0.5 * (c[i] + c[2 + i]);
        if (c[i] > 0.0) js += 0.5 * c[i] * std::log(c[i] / m);
        if (c[2 + i] > 0.0) js += 0.5 * c[2 + i] * std::log(c[2 + i] / m);
      }
      out << evalharness::format_double(c[0]) << ',' << evalharness::format_double(c[1]) << ','
          << evalharness::format_double(c[2]) << ',' << evalharness::format_double(c[3]) << ','
          << evalharness::format_double(js) << '\n';
    }
    close_checked(out, path);
  }

  // Planted timings with one outlier: quartiles are 1 and 1, so the fence
  // is [1, 1].
  {
    const fs::path path = dir / "iqr_planted.csv";
    std::ofstream out = open_out(path);
    out << "ms\n1\n1\n1\n1\n100\n";
    close_checked(out, path);
    const fs::path expected = dir / "iqr_expected.csv";
    std::ofstream ex = open_out(expected);
    ex << "mean_ms,std_ms,removed,reps\n1,0,1,5\n";
    close_checked(ex, expected);
  }

  // 1x3 corridor, uniform prior, always "right", noiseless sensor. A start
  // in cell 2 hits the wall; cells 0 and 1 move right.
  {
    const fs::path path = dir / "corridor_posterior.csv";
    std::ofstream out = open_out(path);
    out << "observation,cell,probability\n";
    double no_hit[3] = {0, 0, 0};
    double hit[3] = {0, 0, 0};
    for (int start = 0; start < 3; ++start) {
      const bool wall = start == 2;
      const int end = wall ? start : start + 1;
      (wall ? hit : no_hit)[end] += 1.0 / 3.0;
    }
    for (const auto& [name, mass] : {std::pair<const char*, double*>{"no_hit", no_hit}, {"hit", hit}}) {
      const double z = mass[0] + mass[1] + mass[2];
      for (int c = 0; c < 3; ++c) out << name << ',' << c << ',' << evalharness::format_double(mass[c] / z) << '\n';
    }
    close_checked(out, path);
  }

  // Synthetic per-episode divergences and their aggregate for plotting
  // checks: two filters, four episodes, steps 1 to 18.
  {
    std::vector<evalharness::EpisodeRow> rows;
    for (int e = 0; e < 4; ++e) {
      for (int t = 1; t <= 18; ++t) {
        const double base = 0.03 * t;
        rows.push_back({"fixture", "fixed", "pf:32", 0, e, t, std::min(std::numbers::ln2, base + 0.02 * e), false});
        rows.push_back({"fixture", "fixed", "nbf:32", 0, e, t, 0.5 * base + 0.01 * ((e * 7 + t) % 3), false});
      }
    }
    const fs::path ep = dir / "divergence_episodes.csv";
    std::ofstream out = open_out(ep);
    evalharness::write_episode_csv(out, rows);
    close_checked(out, ep);
    const fs::path ag = dir / "divergence_aggregate.csv";
    std::ofstream agg = open_out(ag);
    evalharness::write_aggregate_csv(agg, evalharness::aggregate(rows));
    close_checked(agg, ag);
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural Bayesian filtering: training, evaluation and benchmarks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string checkpoint;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<CLI::Option*> checkpoint_opts;
  std::vector<CLI::Option*> seed_opts;
  const auto add = [&](const char* name, const char* help, bool needs_config) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (needs_config) {
      sub->add_option("--config", config_path, "Run config (YAML)")->required();
      checkpoint_opts.push_back(sub->add_option("--checkpoint", checkpoint, "Trained model checkpoint"));
      seed_opts.push_back(sub->add_option("--seed", seed, "Override the command's seed"));
      sub->add_option("--workers", workers, "Parallel episode workers")->check(CLI::PositiveNumber);
    }
    sub->add_option("--out", out_dir, "Output directory");
    return sub;
  };
  CLI::App* train = add("train", "Train a belief model", true);
  CLI::App* eval = add("eval", "Evaluate filters against ground truth", true);
  CLI::App* bench = add("bench", "Time single filter updates", true);
  CLI::App* fixtures = add("gen-fixtures", "Write small test fixtures", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CommandOptions options;
  options.config_path = config_path;
  options.out_dir = out_dir;
  options.workers = workers;
  options.log = &err;
  for (const CLI::Option* o : checkpoint_opts) {
    if (o->count() > 0) options.checkpoint = checkpoint;
  }
  for (const CLI::Option* o : seed_opts) {
    if (o->count() > 0) options.seed = seed;
  }

  try {
    if (fixtures->parsed()) {
      cmd_gen_fixtures(out_dir);
      return kExitOk;
    }
    const RunConfig config = load_run_config(config_path);
    if (train->parsed()) cmd_train(config, options);
    if (eval->parsed()) cmd_eval(config, options);
    if (bench->parsed()) cmd_bench(config, options);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << config_path;
    if (e.line() > 0) err << ':' << e.line();
    err << ": config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace nbf::cli
