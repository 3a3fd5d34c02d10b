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

#include "nbf/evalharness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nbf/numkit/exact_sum.hpp"

namespace nbf::evalharness {

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_divergence: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) throw std::invalid_argument("js_divergence: negative probability");
    const double m = 0.5 * (p[i] + q[i]);
    const double a = p[i] > 0.0 ? p[i] * std::log(p[i] / m) : 0.0;
    const double b = q[i] > 0.0 ? q[i] * std::log(q[i] / m) : 0.0;
    total += 0.5 * (a + b);
  }
  return std::clamp(total, 0.0, std::numbers::ln2);
}

void HistogramSpec::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("HistogramSpec: bad axis ranges");
  if (cells_per_axis < 1) throw std::invalid_argument("HistogramSpec: cells_per_axis must be >= 1");
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a])) {
      throw std::invalid_argument("HistogramSpec: empty axis range");
    }
  }
}

std::size_t HistogramSpec::num_cells() const {
  std::size_t n = 1;
  for (std::size_t a = 0; a < dims(); ++a) n *= static_cast<std::size_t>(cells_per_axis);
  return n;
}

std::size_t HistogramSpec::cell_of(std::span<const double> point) const {
  if (point.size() < dims()) throw std::invalid_argument("HistogramSpec: point has too few coordinates");
  std::size_t index = 0;
  for (std::size_t a = 0; a < dims(); ++a) {
    const double x = point[a];
    if (!std::isfinite(x)) throw std::invalid_argument("discretize: non-finite point");
    const double rel = (x - lo[a]) / (hi[a] - lo[a]) * cells_per_axis;
    const int c = rel <= 0.0 ? 0 : rel >= cells_per_axis ? cells_per_axis - 1 : static_cast<int>(rel);
    index = index * static_cast<std::size_t>(cells_per_axis) + static_cast<std::size_t>(c);
  }
  return index;
}

HistogramGrid discretize(const HistogramSpec& spec, const Matrix& points, std::span<const double> weights) {
  spec.validate();
  if (static_cast<std::size_t>(points.rows()) != weights.size()) {
    throw std::invalid_argument("discretize: points/weights size mismatch");
  }
  std::vector<numkit::ExactSum> cells(spec.num_cells());
  numkit::ExactSum total;
  std::vector<double> row(static_cast<std::size_t>(points.cols()));
  for (numkit::Index i = 0; i < points.rows(); ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("discretize: bad weight");
    if (w == 0.0) continue;
    for (numkit::Index j = 0; j < points.cols(); ++j) row[static_cast<std::size_t>(j)] = points(i, j);
    cells[spec.cell_of(row)].add(w);
    total.add(w);
  }
  const double z = total.value();
  if (!(z > 0.0)) throw std::invalid_argument("discretize: all weights are zero");
  HistogramGrid out{spec, std::vector<double>(cells.size())};
  for (std::size_t c = 0; c < cells.size(); ++c) out.probs[c] = cells[c].value() / z;
  return out;
}

double js_divergence(const HistogramGrid& p, const HistogramGrid& q) {
  if (p.spec.lo != q.spec.lo || p.spec.hi != q.spec.hi || p.spec.cells_per_axis != q.spec.cells_per_axis) {
    throw std::invalid_argument("js_divergence: histogram grids differ");
  }
  return js_divergence(p.probs, q.probs);
}

}  // namespace nbf::evalharness
