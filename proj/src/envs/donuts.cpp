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

#include "nbf/envs/donuts.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nbf::envs {

void DonutParams::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("donut radius must be positive");
  if (!(width >= 0.0)) throw std::invalid_argument("donut width must be non-negative");
}

std::vector<std::array<double, 2>> donut_sample(const DonutParams& params, int n, numkit::RngStream& rng) {
  params.validate();
  if (n < 1) throw std::invalid_argument("donut_sample: n must be at least 1");
  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    double r = params.radius;
    if (params.width > 0.0) {
      do {
        r = params.radius + params.width * rng.normal();
      } while (r < 0.0);
    }
    p = {params.mean[0] + r * std::cos(angle), params.mean[1] + r * std::sin(angle)};
  }
  return out;
}

DonutParams random_donut(numkit::RngStream& rng) {
  DonutParams p;
  p.mean = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
  p.radius = rng.uniform(1.5, 3.0);
  p.width = rng.uniform(0.05, 0.2);
  return p;
}

}  // namespace nbf::envs
