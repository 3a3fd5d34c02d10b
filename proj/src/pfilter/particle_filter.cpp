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

#include "nbf/pfilter/particle_filter.hpp"

#include <algorithm>
#include <limits>

namespace nbf::pfilter {

double ess(std::span<const double> weights) {
  double s = 0.0;
  double s2 = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("ess: weights must be finite and non-negative");
    s += w;
    s2 += w * w;
  }
  if (s2 == 0.0) throw std::invalid_argument("ess: all weights are zero");
  return s * s / s2;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("systematic_indices: no weights");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("systematic_indices: weights sum to zero");
  std::vector<std::size_t> out;
  out.reserve(n);
  const double stride = 1.0 / static_cast<double>(n);
  std::size_t i = 0;
  double cum = weights[0] / total;
  for (std::size_t j = 0; j < n; ++j) {
    const double target = u + static_cast<double>(j) * stride;
    while (target >= cum && i + 1 < n) cum += weights[++i] / total;
    out.push_back(i);
  }
  return out;
}

bool normalize_log_weights(std::vector<double>& log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v)) return false;
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) return false;
  double z = 0.0;
  for (double v : log_weights) z += std::exp(v - top);
  const double log_z = top + std::log(z);
  for (double& v : log_weights) v -= log_z;
  return true;
}

double self_normalized_estimate(std::span<const double> log_weights, std::span<const double> values) {
  if (log_weights.size() != values.size()) throw std::invalid_argument("estimate: size mismatch");
  std::vector<double> lw(log_weights.begin(), log_weights.end());
  if (!normalize_log_weights(lw)) throw std::invalid_argument("estimate: all weights are zero");
  double est = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    if (lw[i] > -std::numeric_limits<double>::infinity()) est += std::exp(lw[i]) * values[i];
  }
  return est;
}

}  // namespace nbf::pfilter
