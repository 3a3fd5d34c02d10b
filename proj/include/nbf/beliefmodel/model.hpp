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

#include <span>
#include <string>
#include <vector>

#include "nbf/beliefmodel/config.hpp"
#include "nbf/numkit/autodiff.hpp"
#include "nbf/numkit/mlp.hpp"
#include "nbf/numkit/rng.hpp"

namespace nbf::beliefmodel {

using numkit::Index;
using numkit::Matrix;
using numkit::ParamVars;
using numkit::Var;

/// Affine log-scales and the NLSq log-slope b are squashed to
/// (-kMaxLogScale, kMaxLogScale).
inline constexpr double kMaxLogScale = 7.0;

/// x = a + b z + c / (1 + (d z + g)^2).
struct NlsqCoeffs {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  double d = 0.0;
  double g = 0.0;
};

double nlsq_forward(const NlsqCoeffs& k, double z);
double nlsq_derivative(const NlsqCoeffs& k, double z);
/// Strictly increasing iff b > 0 and |c d| 8 sqrt(3) / 9 < b.
bool nlsq_invertible(const NlsqCoeffs& k);
/// Real cubic root followed by safeguarded Newton polishing. Throws
/// std::domain_error when the coefficients violate the invertibility bound.
double nlsq_inverse(const NlsqCoeffs& k, double x);

/// Coordinates a coupling layer passes through unchanged and transforms.
struct LayerMask {
  std::vector<Index> pass;
  std::vector<Index> transform;
};

std::vector<LayerMask> layer_masks(const ModelConfig& config);
numkit::MlpSpec embed_spec(const ModelConfig& config);
numkit::MlpSpec conditioner_spec(const ModelConfig& config, int layer);
numkit::MlpSpec dequantizer_spec(const ModelConfig& config);
std::string conditioner_prefix(int layer);

/// Immutable once trained; safe to share across threads.
struct BeliefModel {
  ModelConfig config;
  numkit::ParamSet params;

  /// Throws std::invalid_argument if params do not fit config.
  void check() const;
  [[nodiscard]] int state_dim() const noexcept { return config.state_dim; }
  [[nodiscard]] int embedding_dim() const noexcept { return config.embedding_dim; }
  bool operator==(const BeliefModel&) const = default;
};

/// Glorot embedding network; conditioners and dequantizer start with a zero
/// output layer, so the flow is the identity at initialization.
BeliefModel init_model(const ModelConfig& config, numkit::RngStream& rng);

// ---------------------------------------------------------------------------
// Tape versions. Rows are samples; `theta_rows` holds the embedding that
// conditions each row.

struct FlowPass {
  Var out;
  Var log_det;  // R x 1
};

FlowPass flow_forward(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var z);
FlowPass flow_inverse(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var x);
/// log p(z) under the prior, R x 1.
Var log_prior(const ModelConfig& config, Var z);
/// R x 1. Points outside a uniform prior's box are clipped, so callers must
/// check support themselves (the plain overload does).
Var log_density(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var x);
/// Per-row embeddings, R x m.
Var embed_rows(const BeliefModel& model, const ParamVars& pv, Var codes);

struct Dequantized {
  Var x_cont;
  Var log_q;  // R x 1
};

/// `eps` is standard normal noise with the shape of `codes`.
Dequantized dequantize(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var codes,
                       const Matrix& eps);

/// Each batch entry is an n x d matrix of codes drawn from one distribution.
/// The first n/2 rows embed, the rest are scored.
Var nll_loss(const BeliefModel& model, const ParamVars& pv, const std::vector<Matrix>& batch,
             numkit::RngStream& rng);

// ---------------------------------------------------------------------------
// Plain versions.

using Embedding = std::vector<double>;

/// Weighted mean of per-sample embeddings. Rows are sorted, duplicates merged
/// and every sum is exact, so the result is bit-identical under permutation
/// and duplication of the sample set. Throws std::invalid_argument on
/// negative, non-finite or all-zero weights.
Embedding embed(const BeliefModel& model, const Matrix& codes, std::span<const double> weights);

struct FlowResult {
  Matrix out;
  std::vector<double> log_det;
};

FlowResult flow_forward(const BeliefModel& model, const Embedding& theta, const Matrix& z);
FlowResult flow_inverse(const BeliefModel& model, const Embedding& theta, const Matrix& x);
/// -infinity for points outside a uniform prior's box.
std::vector<double> log_density(const BeliefModel& model, const Embedding& theta, const Matrix& x);
/// n draws of x = f(z; theta) with z from the prior, as an n x d matrix of
/// continuous codes. Discrete callers round them through the state codec.
Matrix sample_codes(const BeliefModel& model, const Embedding& theta, int n, numkit::RngStream& rng);

struct DequantDraw {
  Matrix x_cont;
  std::vector<double> log_q;
};

DequantDraw dequantize(const BeliefModel& model, const Embedding& theta, const Matrix& codes,
                       numkit::RngStream& rng);

double nll_loss(const BeliefModel& model, const std::vector<Matrix>& batch, numkit::RngStream& rng);

}  // namespace nbf::beliefmodel
