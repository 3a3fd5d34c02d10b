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

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "nbf/numkit/autodiff.hpp"
#include "nbf/oracle/exact.hpp"

namespace nbf::evalharness {

using numkit::Matrix;

/// 0.5 KL(p || m) + 0.5 KL(q || m) with m = (p + q) / 2, natural log.
/// Throws std::invalid_argument on a length mismatch or negative entries.
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Both distributions must be over the same domain.
template <typename State>
double js_divergence(const oracle::DiscreteDist<State>& p, const oracle::DiscreteDist<State>& q) {
  if (p.domain != q.domain) throw std::invalid_argument("js_divergence: domains differ");
  return js_divergence(p.probs, q.probs);
}

/// Probabilities of p and q over the sorted union of their domains.
template <typename State>
std::pair<std::vector<double>, std::vector<double>> align(const oracle::DiscreteDist<State>& p,
                                                          const oracle::DiscreteDist<State>& q) {
  std::vector<double> a;
  std::vector<double> b;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < p.size() || j < q.size()) {
    if (j == q.size() || (i < p.size() && p.domain[i] < q.domain[j])) {
      a.push_back(p.probs[i++]);
      b.push_back(0.0);
    } else if (i == p.size() || q.domain[j] < p.domain[i]) {
      a.push_back(0.0);
      b.push_back(q.probs[j++]);
    } else {
      a.push_back(p.probs[i++]);
      b.push_back(q.probs[j++]);
    }
  }
  return {std::move(a), std::move(b)};
}

/// JS divergence after extending both distributions to the union domain
/// with zeros.
template <typename State>
double aligned_js(const oracle::DiscreteDist<State>& p, const oracle::DiscreteDist<State>& q) {
  const auto [a, b] = align(p, q);
  return js_divergence(a, b);
}

/// Regular grid over a box; cells are numbered row-major over the axes.
struct HistogramSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  int cells_per_axis = 20;

  void validate() const;
  [[nodiscard]] std::size_t dims() const noexcept { return lo.size(); }
  [[nodiscard]] std::size_t num_cells() const;
  /// Out-of-range coordinates land in the edge cells.
  [[nodiscard]] std::size_t cell_of(std::span<const double> point) const;
};

struct HistogramGrid {
  HistogramSpec spec;
  std::vector<double> probs;
};

/// Weighted, normalized bin counts of the rows of `points`. Each cell total
/// is summed exactly, so merging co-located points changes nothing.
/// Throws std::invalid_argument on non-finite points, negative weights or
/// all-zero weights.
HistogramGrid discretize(const HistogramSpec& spec, const Matrix& points, std::span<const double> weights);

double js_divergence(const HistogramGrid& p, const HistogramGrid& q);

}  // namespace nbf::evalharness
