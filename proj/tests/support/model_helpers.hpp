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

// Model fixtures and independent numerical oracles shared by the unit tests
// and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nbf/beliefmodel/model.hpp"

namespace nbf::testing {

using beliefmodel::BeliefModel;
using beliefmodel::Embedding;
using beliefmodel::Index;
using beliefmodel::Matrix;
using beliefmodel::ModelConfig;

inline ModelConfig normal_config(int d) {
  ModelConfig c;
  c.state_dim = d;
  c.embedding_dim = 6;
  c.embed_units = 16;
  c.embed_layers = 2;
  c.flow_units = 16;
  c.flow_layers = 2;
  c.coupling_layers = 4;
  c.prior = beliefmodel::PriorKind::kStandardNormal;
  return c;
}

inline ModelConfig box_config(int d, double side) {
  ModelConfig c = normal_config(d);
  c.prior = beliefmodel::PriorKind::kUniform;
  c.domain_low.assign(static_cast<std::size_t>(d), 0.0);
  c.domain_high.assign(static_cast<std::size_t>(d), side);
  return c;
}

inline ModelConfig small_config(ModelConfig c) {
  c.embedding_dim = 3;
  c.embed_units = 5;
  c.embed_layers = 1;
  c.flow_units = 5;
  c.flow_layers = 1;
  c.coupling_layers = 2;
  c.dequant_units = 5;
  c.dequant_layers = 1;
  return c;
}

/// A freshly initialized model with Gaussian noise of scale `sigma` added to
/// every parameter, so no layer is the identity.
inline BeliefModel perturbed_model(const ModelConfig& c, numkit::RngStream& rng, double sigma) {
  BeliefModel m = beliefmodel::init_model(c, rng);
  for (auto& [name, arr] : m.params) {
    for (double& v : arr.data) v += sigma * rng.normal();
  }
  return m;
}

inline Embedding random_theta(const BeliefModel& m, numkit::RngStream& rng) {
  Embedding t(static_cast<std::size_t>(m.embedding_dim()));
  for (double& v : t) v = rng.normal();
  return t;
}

inline Matrix random_points(int n, int d, numkit::RngStream& rng, double scale = 1.5) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = scale * rng.normal();
  }
  return x;
}

/// log|det J| of the flow at the first row of z, by central differences.
inline double numerical_log_abs_det(const BeliefModel& m, const Embedding& theta, const Matrix& z, bool inverse) {
  const int d = m.state_dim();
  const double h = 1e-6;
  Eigen::MatrixXd jac(d, d);
  for (int j = 0; j < d; ++j) {
    Matrix zp = z, zm = z;
    zp(0, j) += h;
    zm(0, j) -= h;
    const Matrix fp = inverse ? flow_inverse(m, theta, zp).out : flow_forward(m, theta, zp).out;
    const Matrix fm = inverse ? flow_inverse(m, theta, zm).out : flow_forward(m, theta, zm).out;
    for (int i = 0; i < d; ++i) jac(i, j) = (fp(0, i) - fm(0, i)) / (2.0 * h);
  }
  return std::log(std::abs(jac.determinant()));
}

/// Midpoint-rule integral of the density over [-10, 10]^2 (normal prior).
/// For a box prior the rule runs in logistic coordinates x = lo + w s(v),
/// v in [-25, 25]^2, which packs nodes against the edges where the density
/// may have integrable spikes.
inline double riemann_mass(const BeliefModel& m, const Embedding& theta, int cells = 400) {
  const auto& c = m.config;
  const bool box = c.prior == beliefmodel::PriorKind::kUniform;
  const double lo = box ? -25.0 : -10.0;
  const double h = 2.0 * -lo / cells;
  Matrix x(static_cast<Index>(cells) * cells, 2);
  std::vector<double> jac(static_cast<std::size_t>(cells) * cells, 1.0);
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const auto r = static_cast<Index>(i) * cells + j;
      const double v[2] = {lo + (i + 0.5) * h, lo + (j + 0.5) * h};
      for (int k = 0; k < 2; ++k) {
        if (box) {
          const double s = 1.0 / (1.0 + std::exp(-v[k]));
          const double w = c.domain_high[static_cast<std::size_t>(k)] - c.domain_low[static_cast<std::size_t>(k)];
          x(r, k) = c.domain_low[static_cast<std::size_t>(k)] + w * s;
          jac[static_cast<std::size_t>(r)] *= w * s * (1.0 - s);
        } else {
          x(r, k) = v[k];
        }
      }
    }
  }
  double mass = 0.0;
  const auto ld = beliefmodel::log_density(m, theta, x);
  for (std::size_t r = 0; r < ld.size(); ++r) mass += std::exp(ld[r]) * jac[r] * h * h;
  return mass;
}

struct ElboReport {
  double elbo = 0.0;
  double stderr_ = 0.0;
  double exact = 0.0;
};

/// One-dimensional four-state toy: a random dequantizing model on [0, 4), a
/// random cell, the Monte-Carlo ELBO of that cell, and its exact log-mass by
/// midpoint integration of the flow density over the cell.
inline ElboReport elbo_check(numkit::RngStream& rng, int draws = 4000, int intervals = 20000) {
  ModelConfig c = box_config(1, 4.0);
  c.dequantize = true;
  const BeliefModel m = perturbed_model(c, rng, 0.2);
  Embedding theta(static_cast<std::size_t>(c.embedding_dim));
  for (double& v : theta) v = rng.normal();
  const double cell = static_cast<double>(rng.uniform_int(4));

  const Matrix codes = Matrix::Constant(draws, 1, cell);
  const auto dq = beliefmodel::dequantize(m, theta, codes, rng);
  const auto lp = beliefmodel::log_density(m, theta, dq.x_cont);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = lp[static_cast<std::size_t>(i)] - dq.log_q[static_cast<std::size_t>(i)];
    s += v;
    s2 += v * v;
  }
  ElboReport r;
  r.elbo = s / draws;
  r.stderr_ = std::sqrt(std::max(0.0, s2 / draws - r.elbo * r.elbo) / (draws - 1));

  // Integrate over the cell in logistic coordinates x = 4 s(v) so the
  // quadrature resolves any spike at the box edges.
  auto logit = [](double p) { return p <= 0.0 ? -30.0 : (p >= 1.0 ? 30.0 : std::log(p / (1.0 - p))); };
  const double v0 = logit(cell / 4.0), v1 = logit((cell + 1.0) / 4.0);
  const double hv = (v1 - v0) / intervals;
  Matrix grid(intervals, 1);
  std::vector<double> log_jac(static_cast<std::size_t>(intervals));
  for (int i = 0; i < intervals; ++i) {
    const double v = v0 + (i + 0.5) * hv;
    const double sg = 1.0 / (1.0 + std::exp(-v));
    grid(i, 0) = 4.0 * sg;
    log_jac[static_cast<std::size_t>(i)] = std::log(4.0 * sg * (1.0 - sg) * hv);
  }
  auto lg = beliefmodel::log_density(m, theta, grid);
  for (std::size_t i = 0; i < lg.size(); ++i) lg[i] += log_jac[i];
  const double top = *std::max_element(lg.begin(), lg.end());
  double mass = 0.0;
  for (double v : lg) mass += std::exp(v - top);
  r.exact = top + std::log(mass);
  return r;
}

/// Relative error ||g - fd|| / max(||g||, ||fd||) per parameter group, with
/// fd from central differences (h = 1e-6) of the scalar training loss.
inline std::vector<std::pair<std::string, double>> gradient_check(beliefmodel::TransformKind kind, bool box,
                                                                  bool dequant, numkit::RngStream& rng) {
  ModelConfig c = small_config(box ? box_config(2, 4.0) : normal_config(2));
  c.transform = kind;
  c.dequantize = dequant;
  BeliefModel m = perturbed_model(c, rng, 0.3);
  std::vector<Matrix> batch;
  for (int k = 0; k < 2; ++k) {
    Matrix x(6, 2);
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < 2; ++j) {
        if (dequant) {
          x(i, j) = box ? static_cast<double>(rng.uniform_int(4)) : static_cast<double>(rng.uniform_int(4)) - 1.0;
        } else {
          x(i, j) = box ? rng.uniform(0.2, 3.8) : rng.normal();
        }
      }
    }
    batch.push_back(x);
  }
  const numkit::RngStream noise(rng.next_u64(), 7);
  auto loss_of = [&](const numkit::ParamSet& p) {
    BeliefModel mm{m.config, p};
    numkit::RngStream r = noise;
    return beliefmodel::nll_loss(mm, batch, r);
  };
  const auto vg = numkit::value_and_grad(
      [&](numkit::Tape&, const numkit::ParamVars& pv) {
        numkit::RngStream r = noise;
        return beliefmodel::nll_loss(m, pv, batch, r);
      },
      m.params);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [name, arr] : m.params) {
    const auto& g = vg.grads.at(name).data;
    double diff = 0.0, ng = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < arr.data.size(); ++i) {
      numkit::ParamSet p = m.params;
      const double h = 1e-6;
      p.at(name).data[i] += h;
      const double up = loss_of(p);
      p.at(name).data[i] -= 2 * h;
      const double down = loss_of(p);
      const double fd = (up - down) / (2 * h);
      diff += (g[i] - fd) * (g[i] - fd);
      ng += g[i] * g[i];
      nf += fd * fd;
    }
    out.emplace_back(name, std::sqrt(diff) / std::max({std::sqrt(ng), std::sqrt(nf), 1e-12}));
  }
  return out;
}

}  // namespace nbf::testing
