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

#include "nbf/evalharness/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "nbf/numkit/exact_sum.hpp"

namespace nbf::evalharness {

std::vector<DivergenceSeries> aggregate(const std::vector<EpisodeRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::map<int, std::vector<double>>> groups;
  for (const EpisodeRow& r : rows) {
    Key key{r.env, r.condition, r.filter};
    auto it = groups.find(key);
    if (it == groups.end()) {
      order.push_back(key);
      it = groups.emplace(key, std::map<int, std::vector<double>>{}).first;
    }
    it->second[r.step].push_back(r.js);
  }
  std::vector<DivergenceSeries> out;
  for (const Key& key : order) {
    DivergenceSeries s{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}, {}, {}, {}};
    for (const auto& [step, values] : groups.at(key)) {
      const auto n = values.size();
      if (n < 2) {
        throw std::invalid_argument("aggregate: " + s.filter + " step " + std::to_string(step) +
                                    " has fewer than two episodes");
      }
      const double mean = numkit::exact_sum(values) / static_cast<double>(n);
      numkit::ExactSum ss;
      for (double v : values) ss.add((v - mean) * (v - mean));
      const double var = ss.value() / static_cast<double>(n - 1);
      s.steps.push_back(step);
      s.mean.push_back(mean);
      s.stderr_.push_back(std::sqrt(var / static_cast<double>(n)));
      s.episodes.push_back(static_cast<int>(n));
    }
    out.push_back(std::move(s));
  }
  return out;
}

double mean_over_steps(const DivergenceSeries& series, int first, int last) {
  numkit::ExactSum sum;
  int count = 0;
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    if (series.steps[i] < first || series.steps[i] > last) continue;
    sum.add(series.mean[i]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("mean_over_steps: empty step range");
  return sum.value() / count;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

void write_episode_csv(std::ostream& out, const std::vector<EpisodeRow>& rows) {
  out << kEpisodeCsvHeader << '\n';
  for (const EpisodeRow& r : rows) {
    out << r.env << ',' << r.condition << ',' << r.filter << ',' << r.seed << ',' << r.episode << ',' << r.step << ','
        << format_double(r.js) << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<DivergenceSeries>& series) {
  out << kAggregateCsvHeader << '\n';
  for (const DivergenceSeries& s : series) {
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      out << s.env << ',' << s.condition << ',' << s.filter << ',' << s.steps[i] << ',' << format_double(s.mean[i])
          << ',' << format_double(s.stderr_[i]) << ',' << s.episodes[i] << '\n';
    }
  }
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchCsvHeader << '\n';
  for (const BenchRow& r : rows) {
    out << r.env << ',' << r.filter << ',' << format_double(r.report.mean_ms) << ','
        << format_double(r.report.std_ms) << ',' << r.report.removed << ',' << r.report.reps << '\n';
  }
}

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: no data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BenchReport summarize_timings(std::vector<double> ms) {
  if (ms.empty()) throw std::invalid_argument("summarize_timings: no measurements");
  std::sort(ms.begin(), ms.end());
  const double q1 = quantile(ms, 0.25);
  const double q3 = quantile(ms, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  std::vector<double> kept;
  for (double x : ms) {
    if (x >= lo && x <= hi) kept.push_back(x);
  }
  BenchReport r;
  r.reps = static_cast<int>(ms.size());
  r.removed = r.reps - static_cast<int>(kept.size());
  r.mean_ms = numkit::exact_sum(kept) / static_cast<double>(kept.size());
  numkit::ExactSum ss;
  for (double x : kept) ss.add((x - r.mean_ms) * (x - r.mean_ms));
  r.std_ms = std::sqrt(ss.value() / static_cast<double>(kept.size()));
  return r;
}

BenchReport bench(const std::function<void()>& update, int reps, const std::function<void()>& reset) {
  if (reps < 100) throw std::invalid_argument("bench: reps must be >= 100");
  using Clock = std::chrono::steady_clock;
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    if (reset) reset();
    const auto t0 = Clock::now();
    update();
    const auto t1 = Clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize_timings(std::move(ms));
}

}  // namespace nbf::evalharness
