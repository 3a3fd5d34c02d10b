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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbf/beliefmodel/train.hpp"
#include "nbf/cli/run_config.hpp"
#include "nbf/evalharness/report.hpp"

namespace nbf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr const char* kCheckpointFile = "model.nbfm";
inline constexpr const char* kLossFile = "loss.csv";
inline constexpr const char* kEpisodeFile = "episodes.csv";
inline constexpr const char* kAggregateFile = "aggregate.csv";
inline constexpr const char* kBenchFile = "bench.csv";

struct CommandOptions {
  std::string config_path;  // echoed in the manifest only
  std::optional<std::string> checkpoint;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::ostream* log = nullptr;  // progress messages, if any
};

/// Label used in the CSV env column, e.g. "grid-5-2d".
std::string env_label(const EnvConfig& env);

/// Trains a model and writes the checkpoint, loss.csv and a manifest.
beliefmodel::TrainResult cmd_train(RunConfig config, const CommandOptions& options);

struct EvalOutcome {
  std::vector<evalharness::EpisodeRow> rows;
  std::vector<evalharness::DivergenceSeries> series;
};

/// Runs eval.episodes episodes over the roster and writes both CSV schemas
/// and a manifest. Filter failures are data; a roster that needs a model
/// without a checkpoint, or a checkpoint for a different state space, is a
/// ConfigError.
EvalOutcome cmd_eval(RunConfig config, const CommandOptions& options);

/// One bench row per roster entry, in roster order.
std::vector<evalharness::BenchRow> cmd_bench(RunConfig config, const CommandOptions& options);

/// Small fixtures with independently computed expected values.
void cmd_gen_fixtures(const std::string& out_dir);

/// Entry point behind the nbfcli binary. Returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace nbf::cli
