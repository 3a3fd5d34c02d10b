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
#include <vector>

#include "nbf/numkit/rng.hpp"

namespace nbf::envs {

struct DonutParams {
  std::array<double, 2> mean{};
  double radius = 1.0;
  double width = 0.1;

  void validate() const;
};

/// Angle uniform on [0, 2pi), radius ~ N(radius, width^2) truncated at 0.
std::vector<std::array<double, 2>> donut_sample(const DonutParams& params, int n, numkit::RngStream& rng);

/// Random donut with mean in [-2, 2]^2, radius in [1.5, 3], width in [0.05, 0.2].
DonutParams random_donut(numkit::RngStream& rng);

}  // namespace nbf::envs
