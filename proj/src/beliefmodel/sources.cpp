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

#include "nbf/beliefmodel/sources.hpp"

namespace nbf::beliefmodel {

DistributionSource donut_source() {
  return [](numkit::RngStream& rng, int n) {
    const envs::DonutParams p = envs::random_donut(rng);
    const auto xs = envs::donut_sample(p, n, rng);
    Matrix out(n, 2);
    for (int i = 0; i < n; ++i) {
      out(i, 0) = xs[static_cast<std::size_t>(i)][0];
      out(i, 1) = xs[static_cast<std::size_t>(i)][1];
    }
    return out;
  };
}

DistributionSource pool_source(std::shared_ptr<const ParticlePool> pool) {
  if (!pool || pool->sets.empty()) throw std::invalid_argument("pool_source: empty particle pool");
  return [pool = std::move(pool)](numkit::RngStream& rng, int n) {
    const Matrix& set = pool->sets[rng.uniform_int(pool->sets.size())];
    Matrix out(n, set.cols());
    for (int i = 0; i < n; ++i) out.row(i) = set.row(static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(set.rows()))));
    return out;
  };
}

}  // namespace nbf::beliefmodel
