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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace nbf::evalharness {

inline constexpr const char* kEpisodeCsvHeader = "env,condition,filter,seed,episode,step,js_divergence,failed";
inline constexpr const char* kAggregateCsvHeader = "env,condition,filter,step,mean_js,stderr,episodes";
inline constexpr const char* kBenchCsvHeader = "env,filter,mean_ms,std_ms,removed,reps";

struct EpisodeRow {
  std::string env;
  std::string condition;
  std::string filter;
  std::uint64_t seed = 0;
  int episode = 0;
  int step = 0;
  double js = 0.0;
  bool failed = false;
};

/// Per-step mean JS and its standard error (sample std / sqrt(count)).
struct DivergenceSeries {
  std::string env;
  std::string condition;
  std::string filter;
  std::vector<int> steps;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<int> episodes;
};

/// Groups rows by (env, condition, filter) in order of first appearance,
/// steps ascending. Every (group, step) needs at least two episodes.
std::vector<DivergenceSeries> aggregate(const std::vector<EpisodeRow>& rows);

/// Mean of `series` over steps in [first, last].
double mean_over_steps(const DivergenceSeries& series, int first, int last);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

void write_episode_csv(std::ostream& out, const std::vector<EpisodeRow>& rows);
void write_aggregate_csv(std::ostream& out, const std::vector<DivergenceSeries>& series);

struct BenchReport {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int removed = 0;
  int reps = 0;
};

struct BenchRow {
  std::string env;
  std::string filter;
  BenchReport report;
};

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

/// Linear-interpolation quantile of sorted data (numpy's default method).
double quantile(const std::vector<double>& sorted, double p);

/// Drops samples outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] and reports the mean
/// and (population) standard deviation of the rest.
BenchReport summarize_timings(std::vector<double> ms);

/// Times `reps` calls of `update` (milliseconds, monotonic clock).
/// `reset` runs untimed before each call when given. reps must be >= 100.
BenchReport bench(const std::function<void()>& update, int reps, const std::function<void()>& reset = {});

}  // namespace nbf::evalharness
