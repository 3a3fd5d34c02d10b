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

#include "nbf/beliefmodel/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "nbf/numkit/exact_sum.hpp"

namespace nbf::beliefmodel {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
// Clips applied before a logit so cell edges and prior-box edges stay finite.
constexpr double kUnitClip = 1e-12;
// |c| <= kCBound * b / sqrt(1 + d^2) keeps |c d| 8 sqrt(3) / 9 below 0.95 b.
const double kCBound = 0.95 * 9.0 / (8.0 * std::numbers::sqrt3);

int coeffs_per_coord(TransformKind kind) { return kind == TransformKind::kAffine ? 2 : 5; }

std::vector<Index> iota(Index start, Index count) {
  std::vector<Index> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), start);
  return v;
}

Var cols(Var a, Index start, Index count) {
  const auto idx = iota(start, count);
  return numkit::gather_cols(a, idx);
}

Var column_constant(numkit::Tape& tape, Index rows, double value) {
  return tape.constant(Matrix::Constant(rows, 1, value));
}

Var row_constant(numkit::Tape& tape, const std::vector<double>& v) {
  Matrix m(1, static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Index>(i)) = v[i];
  return tape.constant(std::move(m));
}

double log_box_volume(const ModelConfig& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.domain_low.size(); ++i) s += std::log(c.domain_high[i] - c.domain_low[i]);
  return s;
}

std::vector<double> box_width(const ModelConfig& c) {
  std::vector<double> w(c.domain_low.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = c.domain_high[i] - c.domain_low[i];
  return w;
}

// Box -> R^d. Adds log|dv/dx| to log_det.
Var box_to_logit(const ModelConfig& c, Var x, Var& log_det) {
  numkit::Tape& tape = *x.tape();
  Var s = numkit::clip((x - row_constant(tape, c.domain_low)) / row_constant(tape, box_width(c)), kUnitClip,
                       1.0 - kUnitClip);
  Var ls = numkit::log(s);
  Var l1s = numkit::log(1.0 - s);
  log_det = log_det - numkit::row_sum(ls + l1s) - log_box_volume(c);
  return ls - l1s;
}

// R^d -> box. Adds log|dx/dv| to log_det.
Var logit_to_box(const ModelConfig& c, Var v, Var& log_det) {
  numkit::Tape& tape = *v.tape();
  log_det = log_det + numkit::row_sum(numkit::log_sigmoid(v) + numkit::log_sigmoid(-v)) + log_box_volume(c);
  return row_constant(tape, c.domain_low) + row_constant(tape, box_width(c)) * numkit::sigmoid(v);
}

struct AffineCoeffs {
  Var s;
  Var t;
};

struct NlsqVars {
  Var a, b, c, d, g;
};

AffineCoeffs affine_coeffs(Var h, Index n) {
  return {kMaxLogScale * numkit::tanh(cols(h, 0, n) * (1.0 / kMaxLogScale)), cols(h, n, n)};
}

NlsqVars nlsq_coeffs(Var h, Index n) {
  NlsqVars k;
  k.a = cols(h, 0, n);
  k.b = numkit::exp(kMaxLogScale * numkit::tanh(cols(h, n, n) * (1.0 / kMaxLogScale)));
  k.d = cols(h, 3 * n, n);
  k.g = cols(h, 4 * n, n);
  k.c = kCBound * numkit::tanh(cols(h, 2 * n, n)) * k.b / numkit::sqrt(numkit::square(k.d) + 1.0);
  return k;
}

// log f'(z) for the NLSq map, elementwise.
Var nlsq_log_slope(const NlsqVars& k, Var z) {
  Var u = k.d * z + k.g;
  Var q = numkit::square(u) + 1.0;
  return numkit::log(k.b - 2.0 * k.c * k.d * u / numkit::square(q));
}

// z = f^{-1}(x) with gradients from the implicit function theorem.
Var nlsq_inverse_op(Var x, const NlsqVars& k) {
  const Matrix& xv = x.value();
  Matrix z(xv.rows(), xv.cols());
  for (Index i = 0; i < xv.rows(); ++i) {
    for (Index j = 0; j < xv.cols(); ++j) {
      const NlsqCoeffs c{k.a.value()(i, j), k.b.value()(i, j), k.c.value()(i, j), k.d.value()(i, j),
                         k.g.value()(i, j)};
      z(i, j) = nlsq_inverse(c, xv(i, j));
    }
  }
  const std::array<Var, 6> parents = {x, k.a, k.b, k.c, k.d, k.g};
  const std::array<int, 6> ids = {x.id(), k.a.id(), k.b.id(), k.c.id(), k.d.id(), k.g.id()};
  return x.tape()->record(
      std::move(z), std::span<const Var>(parents),
      [ids](numkit::Tape& t, int self) {
        const Matrix& zv = t.value(self);
        const Matrix& g = t.adjoint(self);
        const auto b = t.value(ids[2]).array();
        const auto c = t.value(ids[3]).array();
        const auto d = t.value(ids[4]).array();
        const auto gg = t.value(ids[5]).array();
        const Eigen::ArrayXXd u = d * zv.array() + gg;
        const Eigen::ArrayXXd q = 1.0 + u.square();
        const Eigen::ArrayXXd slope = b - 2.0 * c * d * u / q.square();
        const Eigen::ArrayXXd w = g.array() / slope;
        t.accumulate(ids[0], w.matrix());
        t.accumulate(ids[1], (-w).matrix());
        t.accumulate(ids[2], (-w * zv.array()).matrix());
        t.accumulate(ids[3], (-w / q).matrix());
        t.accumulate(ids[4], (w * c * 2.0 * u * zv.array() / q.square()).matrix());
        t.accumulate(ids[5], (w * c * 2.0 * u / q.square()).matrix());
      },
      "nlsq_inverse");
}

Var conditioner_out(const BeliefModel& model, const ParamVars& pv, int layer, const LayerMask& mask,
                    Var theta_rows, Var in) {
  Var cond = mask.pass.empty() ? theta_rows
                               : numkit::concat_cols({numkit::gather_cols(in, mask.pass), theta_rows});
  return numkit::mlp_apply(conditioner_spec(model.config, layer), pv, conditioner_prefix(layer), cond);
}

Var reassemble(Var in, const LayerMask& mask, Var transformed) {
  if (mask.pass.empty()) return transformed;
  std::vector<Index> order = mask.pass;
  order.insert(order.end(), mask.transform.begin(), mask.transform.end());
  std::vector<Index> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[static_cast<std::size_t>(order[i])] = static_cast<Index>(i);
  return numkit::gather_cols(numkit::concat_cols({numkit::gather_cols(in, mask.pass), transformed}), inverse);
}

Var coupling(const BeliefModel& model, const ParamVars& pv, int layer, const LayerMask& mask, Var theta_rows,
             Var in, Var& log_det, bool inverse) {
  const Var h = conditioner_out(model, pv, layer, mask, theta_rows, in);
  const auto n = static_cast<Index>(mask.transform.size());
  const Var part = numkit::gather_cols(in, mask.transform);
  Var out;
  if (model.config.transform == TransformKind::kAffine) {
    const AffineCoeffs k = affine_coeffs(h, n);
    if (!inverse) {
      out = part * numkit::exp(k.s) + k.t;
      log_det = log_det + numkit::row_sum(k.s);
    } else {
      out = (part - k.t) * numkit::exp(-k.s);
      log_det = log_det - numkit::row_sum(k.s);
    }
  } else {
    const NlsqVars k = nlsq_coeffs(h, n);
    if (!inverse) {
      Var u = k.d * part + k.g;
      out = k.a + k.b * part + k.c / (numkit::square(u) + 1.0);
      log_det = log_det + numkit::row_sum(nlsq_log_slope(k, part));
    } else {
      out = nlsq_inverse_op(part, k);
      log_det = log_det - numkit::row_sum(nlsq_log_slope(k, out));
    }
  }
  return reassemble(in, mask, out);
}

ParamVars constant_params(numkit::Tape& tape, const BeliefModel& model) { return ParamVars(tape, model.params, false); }

Var theta_rows_of(numkit::Tape& tape, const BeliefModel& model, const Embedding& theta, Index rows) {
  if (static_cast<int>(theta.size()) != model.embedding_dim()) {
    throw std::invalid_argument("theta has length " + std::to_string(theta.size()) + ", model expects " +
                                std::to_string(model.embedding_dim()));
  }
  Matrix m(rows, static_cast<Index>(theta.size()));
  for (Index i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < theta.size(); ++j) m(i, static_cast<Index>(j)) = theta[j];
  }
  return tape.constant(std::move(m));
}

void check_points(const BeliefModel& model, const Matrix& x, const char* what) {
  if (x.cols() != model.state_dim()) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(model.state_dim()) +
                                " columns, got " + std::to_string(x.cols()));
  }
}

std::vector<double> to_vector(const Matrix& col) { return {col.data(), col.data() + col.size()}; }

}  // namespace

// ---------------------------------------------------------------------------
// NLSq scalar map

double nlsq_forward(const NlsqCoeffs& k, double z) {
  const double u = k.d * z + k.g;
  return k.a + k.b * z + k.c / (1.0 + u * u);
}

double nlsq_derivative(const NlsqCoeffs& k, double z) {
  const double u = k.d * z + k.g;
  const double q = 1.0 + u * u;
  return k.b - 2.0 * k.c * k.d * u / (q * q);
}

bool nlsq_invertible(const NlsqCoeffs& k) {
  return k.b > 0.0 && std::abs(k.c * k.d) * 8.0 * std::numbers::sqrt3 / 9.0 < k.b;
}

namespace {

// Real roots of t^3 + p t + q = 0.
std::vector<double> depressed_cubic_roots(double p, double q) {
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return {std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s)};
  }
  const double r = 2.0 * std::sqrt(-p / 3.0);
  const double phi = std::acos(std::clamp(3.0 * q / (p * r), -1.0, 1.0));
  return {r * std::cos(phi / 3.0), r * std::cos((phi + 2.0 * std::numbers::pi) / 3.0),
          r * std::cos((phi + 4.0 * std::numbers::pi) / 3.0)};
}

}  // namespace

double nlsq_inverse(const NlsqCoeffs& k, double x) {
  if (!nlsq_invertible(k)) throw std::domain_error("nlsq coefficients violate the invertibility bound");
  if (!std::isfinite(x)) throw std::domain_error("nlsq inverse of a non-finite value");
  const double r = x - k.a;
  double lo = (r - std::abs(k.c)) / k.b;
  double hi = (r + std::abs(k.c)) / k.b;
  auto resid = [&](double z) { return nlsq_forward(k, z) - x; };
  // Rounding in a + b z can push the exact bracket a few ulps off.
  for (int widen = 0; widen < 8 && (resid(lo) > 0.0 || resid(hi) < 0.0); ++widen) {
    const double pad = std::ldexp(1.0, 4 * widen) * 1e-15 * (1.0 + std::abs(lo) + std::abs(hi));
    if (resid(lo) > 0.0) lo -= pad;
    if (resid(hi) < 0.0) hi += pad;
  }
  if (resid(lo) > 0.0 || resid(hi) < 0.0) throw std::domain_error("nlsq inverse has no root in range");

  double z = r / k.b;
  if (std::abs(k.d) > 1e-8) {
    // With u = d z + g:  u^3 + A u^2 + u + C = 0.
    const double beta = k.b / k.d;
    const double A = -(k.g + r / beta);
    const double C = A + k.c / beta;
    const double p = 1.0 - A * A / 3.0;
    const double q = 2.0 * A * A * A / 27.0 - A / 3.0 + C;
    double best = std::numeric_limits<double>::infinity();
    for (double t : depressed_cubic_roots(p, q)) {
      const double cand = (t - A / 3.0 - k.g) / k.d;
      const double e = std::abs(resid(cand));
      if (std::isfinite(cand) && e < best) {
        best = e;
        z = cand;
      }
    }
  }
  z = std::clamp(z, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double f = resid(z);
    if (f == 0.0) break;
    if (f < 0.0) {
      lo = z;
    } else {
      hi = z;
    }
    double next = z - f / nlsq_derivative(k, z);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-15 * (1.0 + std::abs(z))) {
      z = next;
      break;
    }
    z = next;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Structure

std::vector<LayerMask> layer_masks(const ModelConfig& config) {
  std::vector<LayerMask> masks(static_cast<std::size_t>(config.coupling_layers));
  for (int l = 0; l < config.coupling_layers; ++l) {
    LayerMask& m = masks[static_cast<std::size_t>(l)];
    if (config.state_dim == 1) {
      m.transform = {0};
      continue;
    }
    for (int j = 0; j < config.state_dim; ++j) ((j + l) % 2 == 0 ? m.pass : m.transform).push_back(j);
  }
  return masks;
}

numkit::MlpSpec embed_spec(const ModelConfig& c) {
  return {c.state_dim, c.embed_units, c.embed_layers, c.embedding_dim, numkit::Activation::kRelu};
}

numkit::MlpSpec conditioner_spec(const ModelConfig& c, int layer) {
  const LayerMask m = layer_masks(c).at(static_cast<std::size_t>(layer));
  return {static_cast<int>(m.pass.size()) + c.embedding_dim, c.flow_units, c.flow_layers,
          coeffs_per_coord(c.transform) * static_cast<int>(m.transform.size()), numkit::Activation::kRelu};
}

numkit::MlpSpec dequantizer_spec(const ModelConfig& c) {
  return {c.state_dim + c.embedding_dim, c.dequant_units, c.dequant_layers, 2 * c.state_dim,
          numkit::Activation::kRelu};
}

std::string conditioner_prefix(int layer) { return "flow" + std::to_string(layer); }

void BeliefModel::check() const {
  config.validate();
  std::size_t groups = 0;
  auto check_mlp = [&](const numkit::MlpSpec& spec, const std::string& prefix) {
    numkit::mlp_check(spec, prefix, params);
    groups += 2 * static_cast<std::size_t>(spec.linear_layers());
  };
  check_mlp(embed_spec(config), "embed");
  for (int l = 0; l < config.coupling_layers; ++l) check_mlp(conditioner_spec(config, l), conditioner_prefix(l));
  if (config.dequantize) check_mlp(dequantizer_spec(config), "dequant");
  if (groups != params.group_count()) {
    throw std::invalid_argument("model has " + std::to_string(params.group_count()) + " parameter groups, config implies " +
                                std::to_string(groups));
  }
}

BeliefModel init_model(const ModelConfig& config, numkit::RngStream& rng) {
  config.validate();
  BeliefModel m;
  m.config = config;
  numkit::mlp_init(embed_spec(config), "embed", m.params, rng);
  for (int l = 0; l < config.coupling_layers; ++l) {
    numkit::mlp_init(conditioner_spec(config, l), conditioner_prefix(l), m.params, rng, /*zero_output=*/true);
  }
  if (config.dequantize) numkit::mlp_init(dequantizer_spec(config), "dequant", m.params, rng, /*zero_output=*/true);
  return m;
}

// ---------------------------------------------------------------------------
// Tape versions

FlowPass flow_forward(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var z) {
  const ModelConfig& c = model.config;
  Var log_det = column_constant(*z.tape(), z.rows(), 0.0);
  Var h = c.prior == PriorKind::kUniform ? box_to_logit(c, z, log_det) : z;
  const auto masks = layer_masks(c);
  for (int l = 0; l < c.coupling_layers; ++l) {
    h = coupling(model, pv, l, masks[static_cast<std::size_t>(l)], theta_rows, h, log_det, false);
  }
  if (c.prior == PriorKind::kUniform) h = logit_to_box(c, h, log_det);
  return {h, log_det};
}

FlowPass flow_inverse(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var x) {
  const ModelConfig& c = model.config;
  Var log_det = column_constant(*x.tape(), x.rows(), 0.0);
  Var h = c.prior == PriorKind::kUniform ? box_to_logit(c, x, log_det) : x;
  const auto masks = layer_masks(c);
  for (int l = c.coupling_layers - 1; l >= 0; --l) {
    h = coupling(model, pv, l, masks[static_cast<std::size_t>(l)], theta_rows, h, log_det, true);
  }
  if (c.prior == PriorKind::kUniform) h = logit_to_box(c, h, log_det);
  return {h, log_det};
}

Var log_prior(const ModelConfig& c, Var z) {
  if (c.prior == PriorKind::kUniform) return column_constant(*z.tape(), z.rows(), -log_box_volume(c));
  return -0.5 * numkit::row_sum(numkit::square(z)) - 0.5 * kLog2Pi * c.state_dim;
}

Var log_density(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var x) {
  const FlowPass inv = flow_inverse(model, pv, theta_rows, x);
  return log_prior(model.config, inv.out) + inv.log_det;
}

Var embed_rows(const BeliefModel& model, const ParamVars& pv, Var codes) {
  return numkit::mlp_apply(embed_spec(model.config), pv, "embed", codes);
}

Dequantized dequantize(const BeliefModel& model, const ParamVars& pv, Var theta_rows, Var codes, const Matrix& eps) {
  if (!model.config.dequantize) throw std::logic_error("model has no dequantizer");
  numkit::Tape& tape = *codes.tape();
  const Index d = model.state_dim();
  const Var h = numkit::mlp_apply(dequantizer_spec(model.config), pv, "dequant",
                                  numkit::concat_cols({codes, theta_rows}));
  const AffineCoeffs k = affine_coeffs(h, d);
  const Var e = tape.constant(eps);
  const Var v = e * numkit::exp(k.s) + k.t;
  const Var u = numkit::clip(numkit::sigmoid(v), kUnitClip, 1.0 - kUnitClip);
  const double log_noise_const = -0.5 * kLog2Pi * static_cast<double>(d);
  Matrix log_noise = (-0.5 * eps.array().square().rowwise().sum() + log_noise_const).matrix();
  Var log_q = tape.constant(std::move(log_noise)) - numkit::row_sum(k.s) -
              numkit::row_sum(numkit::log_sigmoid(v) + numkit::log_sigmoid(-v));
  return {codes + u, log_q};
}

Var nll_loss(const BeliefModel& model, const ParamVars& pv, const std::vector<Matrix>& batch,
             numkit::RngStream& rng) {
  if (batch.empty()) throw std::invalid_argument("nll_loss: empty batch");
  const Index n = batch.front().rows();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("nll_loss: sample count must be even and >= 2");
  const Index half = n / 2;
  const Index d = model.state_dim();
  const auto B = static_cast<Index>(batch.size());
  Matrix embed_codes(B * half, d);
  Matrix score_codes(B * half, d);
  for (Index k = 0; k < B; ++k) {
    const Matrix& m = batch[static_cast<std::size_t>(k)];
    if (m.rows() != n || m.cols() != d) throw std::invalid_argument("nll_loss: ragged batch");
    embed_codes.middleRows(k * half, half) = m.topRows(half);
    score_codes.middleRows(k * half, half) = m.bottomRows(half);
  }
  numkit::Tape& tape = pv.tape();
  Matrix pool = Matrix::Zero(B, B * half);
  for (Index k = 0; k < B; ++k) pool.block(k, k * half, 1, half).setConstant(1.0 / static_cast<double>(half));
  const Var theta = numkit::matmul(tape.constant(std::move(pool)), embed_rows(model, pv, tape.constant(embed_codes)));
  std::vector<Index> owner(static_cast<std::size_t>(B * half));
  for (Index i = 0; i < B * half; ++i) owner[static_cast<std::size_t>(i)] = i / half;
  const Var theta_rows = numkit::gather_rows(theta, owner);
  const Var x = tape.constant(std::move(score_codes));
  Var per_point;
  if (model.config.dequantize) {
    Matrix eps(x.rows(), d);
    for (Index i = 0; i < eps.rows(); ++i) {
      for (Index j = 0; j < d; ++j) eps(i, j) = rng.normal();
    }
    const Dequantized dq = dequantize(model, pv, theta_rows, x, eps);
    per_point = log_density(model, pv, theta_rows, dq.x_cont) - dq.log_q;
  } else {
    per_point = log_density(model, pv, theta_rows, x);
  }
  return -numkit::mean(per_point);
}

// ---------------------------------------------------------------------------
// Plain versions

Embedding embed(const BeliefModel& model, const Matrix& codes, std::span<const double> weights) {
  check_points(model, codes, "embed");
  if (codes.rows() < 1) throw std::invalid_argument("embed: no samples");
  if (static_cast<std::size_t>(codes.rows()) != weights.size()) {
    throw std::invalid_argument("embed: " + std::to_string(codes.rows()) + " samples but " +
                                std::to_string(weights.size()) + " weights");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("embed: weights must be finite and >= 0");
  }
  const Index d = codes.cols();
  std::vector<Index> order = iota(0, codes.rows());
  auto row_less = [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j) {
      if (codes(a, j) != codes(b, j)) return codes(a, j) < codes(b, j);
    }
    return false;
  };
  auto row_equal = [&](Index a, Index b) { return !row_less(a, b) && !row_less(b, a); };
  std::sort(order.begin(), order.end(), row_less);

  std::vector<Index> unique_rows;
  std::vector<double> merged;
  numkit::ExactSum total;
  for (std::size_t i = 0; i < order.size();) {
    numkit::ExactSum w;
    std::size_t j = i;
    while (j < order.size() && row_equal(order[i], order[j])) w.add(weights[static_cast<std::size_t>(order[j++])]);
    const double wv = w.value();
    if (wv > 0.0) {
      unique_rows.push_back(order[i]);
      merged.push_back(wv);
      total.add(wv);
    }
    i = j;
  }
  if (unique_rows.empty()) throw std::invalid_argument("embed: all weights are zero");
  const double z = total.value();

  Matrix u(static_cast<Index>(unique_rows.size()), d);
  for (std::size_t i = 0; i < unique_rows.size(); ++i) u.row(static_cast<Index>(i)) = codes.row(unique_rows[i]);
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  const Matrix e = embed_rows(model, pv, tape.constant(std::move(u))).value();

  Embedding theta(static_cast<std::size_t>(model.embedding_dim()));
  for (Index j = 0; j < e.cols(); ++j) {
    numkit::ExactSum s;
    for (Index i = 0; i < e.rows(); ++i) s.add(merged[static_cast<std::size_t>(i)] / z * e(i, j));
    theta[static_cast<std::size_t>(j)] = s.value();
  }
  return theta;
}

FlowResult flow_forward(const BeliefModel& model, const Embedding& theta, const Matrix& z) {
  check_points(model, z, "flow_forward");
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  const FlowPass p = flow_forward(model, pv, theta_rows_of(tape, model, theta, z.rows()), tape.constant(z));
  return {p.out.value(), to_vector(p.log_det.value())};
}

FlowResult flow_inverse(const BeliefModel& model, const Embedding& theta, const Matrix& x) {
  check_points(model, x, "flow_inverse");
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  const FlowPass p = flow_inverse(model, pv, theta_rows_of(tape, model, theta, x.rows()), tape.constant(x));
  return {p.out.value(), to_vector(p.log_det.value())};
}

std::vector<double> log_density(const BeliefModel& model, const Embedding& theta, const Matrix& x) {
  check_points(model, x, "log_density");
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  std::vector<double> out =
      to_vector(log_density(model, pv, theta_rows_of(tape, model, theta, x.rows()), tape.constant(x)).value());
  const ModelConfig& c = model.config;
  for (Index i = 0; i < x.rows(); ++i) {
    bool inside = x.row(i).allFinite();
    if (c.prior == PriorKind::kUniform) {
      for (Index j = 0; j < x.cols(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        inside = inside && x(i, j) >= c.domain_low[sj] && x(i, j) <= c.domain_high[sj];
      }
    }
    if (!inside) out[static_cast<std::size_t>(i)] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

Matrix sample_codes(const BeliefModel& model, const Embedding& theta, int n, numkit::RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const ModelConfig& c = model.config;
  Matrix z(n, c.state_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c.state_dim; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      z(i, j) = c.prior == PriorKind::kUniform ? rng.uniform(c.domain_low[sj], c.domain_high[sj]) : rng.normal();
    }
  }
  return flow_forward(model, theta, z).out;
}

DequantDraw dequantize(const BeliefModel& model, const Embedding& theta, const Matrix& codes,
                       numkit::RngStream& rng) {
  check_points(model, codes, "dequantize");
  Matrix eps(codes.rows(), codes.cols());
  for (Index i = 0; i < eps.rows(); ++i) {
    for (Index j = 0; j < eps.cols(); ++j) eps(i, j) = rng.normal();
  }
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  const Dequantized dq =
      dequantize(model, pv, theta_rows_of(tape, model, theta, codes.rows()), tape.constant(codes), eps);
  return {dq.x_cont.value(), to_vector(dq.log_q.value())};
}

double nll_loss(const BeliefModel& model, const std::vector<Matrix>& batch, numkit::RngStream& rng) {
  numkit::Tape tape;
  const ParamVars pv = constant_params(tape, model);
  return nll_loss(model, pv, batch, rng).scalar();
}

}  // namespace nbf::beliefmodel
