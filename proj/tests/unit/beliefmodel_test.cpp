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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "../support/model_helpers.hpp"
#include "nbf/beliefmodel/checkpoint.hpp"
#include "nbf/beliefmodel/codec.hpp"
#include "nbf/beliefmodel/sources.hpp"
#include "nbf/beliefmodel/train.hpp"
#include "nbf/envs/gridworld.hpp"

namespace nbf::beliefmodel {
namespace {

using testing::box_config;
using testing::normal_config;
using testing::numerical_log_abs_det;
using testing::perturbed_model;
using testing::random_points;
using testing::random_theta;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Embedding zeros(const BeliefModel& m) { return Embedding(static_cast<std::size_t>(m.embedding_dim()), 0.0); }

// ---------------------------------------------------------------------------

TEST(Masks, EveryCoordinateTransformed) {
  for (int d = 1; d <= 4; ++d) {
    ModelConfig c = normal_config(d);
    c.coupling_layers = 2;
    std::vector<int> hits(static_cast<std::size_t>(d), 0);
    for (const LayerMask& m : layer_masks(c)) {
      EXPECT_FALSE(m.transform.empty());
      if (d >= 2) {
        EXPECT_FALSE(m.pass.empty());
      }
      for (Index j : m.transform) ++hits[static_cast<std::size_t>(j)];
    }
    for (int h : hits) EXPECT_GE(h, 1);
  }
}

TEST(Flow, IdentityAtInitialization) {
  numkit::RngStream rng(1, 0);
  for (TransformKind kind : {TransformKind::kAffine, TransformKind::kNlsq}) {
    for (bool box : {false, true}) {
      ModelConfig c = box ? box_config(2, 5.0) : normal_config(2);
      c.transform = kind;
      const BeliefModel m = init_model(c, rng);
      const Matrix z = box ? Matrix((Matrix(3, 2) << 0.5, 4.5, 2.5, 0.01, 3.3, 1.7).finished())
                           : random_points(3, 2, rng);
      const Embedding theta = random_theta(m, rng);
      const FlowResult f = flow_forward(m, theta, z);
      EXPECT_LT((f.out - z).cwiseAbs().maxCoeff(), 1e-12);
      for (double ld : f.log_det) EXPECT_NEAR(ld, 0.0, 1e-12);
      const FlowResult g = flow_inverse(m, theta, z);
      EXPECT_LT((g.out - z).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Flow, KnownAffineJacobian) {
  numkit::RngStream rng(2, 0);
  ModelConfig c = normal_config(2);
  c.coupling_layers = 2;
  BeliefModel m = init_model(c, rng);
  // Layer 0 transforms coordinate 1; its first output column is the raw
  // log-scale. Raw value 7 atanh(2/7) gives a log-scale of exactly 2.
  auto& bias = m.params.at(numkit::bias_name("flow0", c.flow_layers));
  bias.data[0] = 7.0 * std::atanh(2.0 / 7.0);
  const Matrix z = random_points(5, 2, rng);
  const FlowResult f = flow_forward(m, zeros(m), z);
  for (Index i = 0; i < z.rows(); ++i) {
    EXPECT_NEAR(f.log_det[static_cast<std::size_t>(i)], 2.0, 1e-12);
    EXPECT_NEAR(f.out(i, 1), z(i, 1) * std::exp(2.0), 1e-12);
    EXPECT_EQ(f.out(i, 0), z(i, 0));
  }
}

TEST(Flow, LogDetMatchesNumericalJacobian) {
  numkit::RngStream rng(3, 0);
  for (int d = 1; d <= 3; ++d) {
    for (TransformKind kind : {TransformKind::kAffine, TransformKind::kNlsq}) {
      for (int trial = 0; trial < 5; ++trial) {
        ModelConfig c = trial % 2 == 0 ? normal_config(d) : box_config(d, 4.0);
        c.transform = kind;
        c.coupling_layers = 2;
        const BeliefModel m = perturbed_model(c, rng, 0.3);
        const Embedding theta = random_theta(m, rng);
        Matrix z = trial % 2 == 0 ? random_points(1, d, rng) : Matrix(Matrix::Constant(1, d, 0.0));
        if (trial % 2 == 1) {
          for (int j = 0; j < d; ++j) z(0, j) = rng.uniform(0.5, 3.5);
        }
        const double ld = flow_forward(m, theta, z).log_det[0];
        const double num = numerical_log_abs_det(m, theta, z, false);
        EXPECT_LE(std::abs(ld - num), 1e-4 * std::max(1.0, std::abs(num))) << "d=" << d << " trial " << trial;
        const Matrix x = flow_forward(m, theta, z).out;
        const double ldi = flow_inverse(m, theta, x).log_det[0];
        EXPECT_NEAR(ldi, -ld, 1e-8);
      }
    }
  }
}

TEST(Flow, RoundTrip) {
  numkit::RngStream rng(4, 0);
  for (TransformKind kind : {TransformKind::kAffine, TransformKind::kNlsq}) {
    const double tol = kind == TransformKind::kAffine ? 1e-6 : 1e-4;
    for (int trial = 0; trial < 10; ++trial) {
      ModelConfig c = normal_config(2 + trial % 2);
      c.transform = kind;
      const BeliefModel m = perturbed_model(c, rng, 0.3);
      const Embedding theta = random_theta(m, rng);
      const Matrix z = random_points(100, c.state_dim, rng);
      const Matrix x = flow_forward(m, theta, z).out;
      EXPECT_LE((flow_inverse(m, theta, x).out - z).cwiseAbs().maxCoeff(), tol);
    }
  }
}

TEST(Nlsq, InverseMatchesBisection) {
  const NlsqCoeffs k{0.0, 1.0, 0.1, 1.0, 0.0};
  ASSERT_TRUE(nlsq_invertible(k));
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (nlsq_forward(k, mid) < 0.5 ? lo : hi) = mid;
  }
  EXPECT_NEAR(nlsq_inverse(k, 0.5), 0.5 * (lo + hi), 1e-8);
}

TEST(Nlsq, RandomCoefficientsRoundTrip) {
  numkit::RngStream rng(5, 0);
  for (int i = 0; i < 2000; ++i) {
    NlsqCoeffs k{rng.normal(), std::exp(rng.normal()), 0.0, 3.0 * rng.normal(), rng.normal()};
    k.c = rng.uniform(-0.6, 0.6) * k.b / std::max(std::abs(k.d), 1e-3);
    if (!nlsq_invertible(k)) continue;
    const double z = 3.0 * rng.normal();
    EXPECT_NEAR(nlsq_inverse(k, nlsq_forward(k, z)), z, 1e-9 * (1.0 + std::abs(z)));
  }
}

TEST(Nlsq, ViolatedBoundRejected) {
  EXPECT_THROW(nlsq_inverse({0.0, 1.0, 2.0, 2.0, 0.0}, 0.3), std::domain_error);
  EXPECT_THROW(nlsq_inverse({0.0, -1.0, 0.0, 0.0, 0.0}, 0.3), std::domain_error);
}

TEST(LogDensity, IdentityExamples) {
  numkit::RngStream rng(6, 0);
  const BeliefModel n = init_model(normal_config(2), rng);
  EXPECT_NEAR(log_density(n, zeros(n), Matrix::Zero(1, 2))[0], -kLog2Pi, 1e-12);
  const BeliefModel u = init_model(box_config(2, 5.0), rng);
  const Matrix x = (Matrix(3, 2) << 0.1, 4.9, 2.5, 2.5, 3.0, 0.7).finished();
  for (double v : log_density(u, zeros(u), x)) EXPECT_NEAR(v, -2.0 * std::log(5.0), 1e-10);
  const Matrix out = (Matrix(2, 2) << -0.1, 1.0, 1.0, 5.5).finished();
  for (double v : log_density(u, zeros(u), out)) EXPECT_EQ(v, -std::numeric_limits<double>::infinity());
}

TEST(LogDensity, ScaledGaussianByHand) {
  numkit::RngStream rng(7, 0);
  ModelConfig c = normal_config(2);
  c.coupling_layers = 2;
  BeliefModel m = init_model(c, rng);
  // Both layers scale their transformed coordinate by 2: x = 2 z.
  for (int l = 0; l < 2; ++l) {
    m.params.at(numkit::bias_name(conditioner_prefix(l), c.flow_layers)).data[0] = 7.0 * std::atanh(std::log(2.0) / 7.0);
  }
  const Matrix x = random_points(20, 2, rng, 3.0);
  const auto ld = log_density(m, zeros(m), x);
  for (Index i = 0; i < x.rows(); ++i) {
    double want = 0.0;
    for (int j = 0; j < 2; ++j) want += -0.5 * std::pow(x(i, j) / 2.0, 2) - 0.5 * kLog2Pi - std::log(2.0);
    EXPECT_NEAR(ld[static_cast<std::size_t>(i)], want, 1e-12);
  }
}

TEST(LogDensity, RiemannSumIsOne) {
  numkit::RngStream rng(8, 0);
  for (TransformKind kind : {TransformKind::kAffine, TransformKind::kNlsq}) {
    for (int trial = 0; trial < 3; ++trial) {
      ModelConfig c = trial == 2 ? box_config(2, 4.0) : normal_config(2);
      c.transform = kind;
      const BeliefModel m = perturbed_model(c, rng, 0.2);
      const Embedding theta = random_theta(m, rng);
      EXPECT_NEAR(testing::riemann_mass(m, theta), 1.0, 0.05) << "trial " << trial << " nlsq " << (kind == TransformKind::kNlsq);
    }
  }
}

TEST(Sample, UniformIdentityHistogram) {
  numkit::RngStream rng(9, 0);
  const BeliefModel m = init_model(box_config(2, 5.0), rng);
  const int n = 100000;
  const Matrix x = sample_codes(m, zeros(m), n, rng);
  std::vector<int> counts(25, 0);
  for (Index i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(5 * std::floor(x(i, 0)) + std::floor(x(i, 1)))];
  const double p = 1.0 / 25.0;
  const double se = std::sqrt(p * (1 - p) / n);
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), p, 3.0 * se + 1e-4);
}

TEST(Sample, NormalIdentityMoments) {
  numkit::RngStream rng(10, 0);
  const BeliefModel m = init_model(normal_config(2), rng);
  const Matrix x = sample_codes(m, zeros(m), 100000, rng);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Sample, GridDecodeCountsClamps) {
  envs::GridSpec g;
  g.side = 5;
  g.obstacles = {{{1, 1, 0}, 2}};
  const envs::Gridworld env(g, {{4, 4, 0}, 1e-5});
  numkit::RngStream rng(11, 0);
  const BeliefModel m = init_model(box_config(2, 5.0), rng);
  const auto s = sample_states(m, env, zeros(m), 20000, envs::GridState{{0, 0, 0}}, rng);
  for (const auto& st : s.states) EXPECT_TRUE(g.is_free(st.cell));
  // Four of 25 cells are blocked.
  EXPECT_NEAR(s.clamp_rate(), 4.0 / 25.0, 0.01);
}

TEST(Dequantize, IdentityIsLogisticNormal) {
  numkit::RngStream rng(12, 0);
  ModelConfig c = box_config(2, 5.0);
  c.dequantize = true;
  const BeliefModel m = init_model(c, rng);
  Matrix codes(500, 2);
  for (Index i = 0; i < codes.rows(); ++i) {
    codes(i, 0) = static_cast<double>(rng.uniform_int(5));
    codes(i, 1) = static_cast<double>(rng.uniform_int(5));
  }
  const DequantDraw dq = dequantize(m, random_theta(m, rng), codes, rng);
  for (Index i = 0; i < codes.rows(); ++i) {
    double want = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double u = dq.x_cont(i, j) - codes(i, j);
      ASSERT_GT(u, 0.0);
      ASSERT_LT(u, 1.0);
      const double e = std::log(u / (1.0 - u));
      want += -0.5 * e * e - 0.5 * kLog2Pi - std::log(u * (1.0 - u));
    }
    EXPECT_NEAR(dq.log_q[static_cast<std::size_t>(i)], want, 1e-8);
  }
}

TEST(Dequantize, SupportUnderTrainedLikeParameters) {
  numkit::RngStream rng(13, 0);
  ModelConfig c = normal_config(3);
  c.dequantize = true;
  const BeliefModel m = perturbed_model(c, rng, 1.0);
  const Matrix codes = Matrix::Constant(2000, 3, 2.0);
  const DequantDraw dq = dequantize(m, random_theta(m, rng), codes, rng);
  const Matrix u = dq.x_cont - codes;
  EXPECT_GT(u.minCoeff(), 0.0);
  EXPECT_LT(u.maxCoeff(), 1.0);
  for (double v : dq.log_q) EXPECT_TRUE(std::isfinite(v));
}

TEST(Dequantize, ElboIsALowerBound) {
  numkit::RngStream rng(14, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto r = testing::elbo_check(rng);
    EXPECT_LE(r.elbo, r.exact + 3.0 * r.stderr_) << "trial " << trial;
  }
}

TEST(Embed, SingleSampleIsPerSampleEmbedding) {
  numkit::RngStream rng(15, 0);
  const BeliefModel m = init_model(normal_config(2), rng);
  const Matrix x = (Matrix(1, 2) << 0.3, -1.2).finished();
  const std::vector<double> w = {1.0};
  const Embedding t = embed(m, x, w);
  const auto e = numkit::mlp_apply(embed_spec(m.config), m.params, numkit::DenseArray({1, 2}, {0.3, -1.2}), "embed");
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(t[j], e.data[j], 1e-14);
}

TEST(Embed, WeightedMean) {
  numkit::RngStream rng(16, 0);
  const BeliefModel m = init_model(normal_config(2), rng);
  const Matrix x = (Matrix(2, 2) << 0.0, 1.0, 2.0, -1.0).finished();
  const std::vector<double> w = {2.0, 6.0};
  const Embedding t = embed(m, x, w);
  const std::vector<double> one = {1.0};
  const Embedding e1 = embed(m, x.topRows(1), one);
  const Embedding e2 = embed(m, x.bottomRows(1), one);
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(t[j], 0.25 * e1[j] + 0.75 * e2[j], 1e-14);
}

TEST(Embed, PermutationAndDuplicationBitExact) {
  numkit::RngStream rng(17, 0);
  const BeliefModel m = init_model(normal_config(3), rng);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(60));
    Matrix x = random_points(n, 3, rng);
    for (Index i = 1; i < n; i += 3) x.row(i) = x.row(i - 1);  // some repeats
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& v : w) v = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
    w[0] = 0.5;
    const Embedding base = embed(m, x, w);

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix xp(n, 3);
    std::vector<double> wp(w.size());
    for (Index i = 0; i < n; ++i) {
      xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
      wp[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    EXPECT_EQ(embed(m, xp, wp), base);

    Matrix xd(2 * n, 3);
    xd << x, x;
    std::vector<double> wd = w;
    wd.insert(wd.end(), w.begin(), w.end());
    EXPECT_EQ(embed(m, xd, wd), base);
  }
}

TEST(Embed, RejectsBadWeights) {
  numkit::RngStream rng(18, 0);
  const BeliefModel m = init_model(normal_config(2), rng);
  const Matrix x = Matrix::Zero(2, 2);
  const std::vector<double> zero = {0.0, 0.0};
  const std::vector<double> neg = {1.0, -1.0};
  const std::vector<double> short_w = {1.0};
  EXPECT_THROW(embed(m, x, zero), std::invalid_argument);
  EXPECT_THROW(embed(m, x, neg), std::invalid_argument);
  EXPECT_THROW(embed(m, x, short_w), std::invalid_argument);
}

TEST(NllLoss, IdentityUniformIsLogVolume) {
  numkit::RngStream rng(19, 0);
  const BeliefModel m = init_model(box_config(2, 5.0), rng);
  std::vector<Matrix> batch;
  for (int k = 0; k < 3; ++k) {
    Matrix x(8, 2);
    for (Index i = 0; i < 8; ++i) x.row(i) << rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0);
    batch.push_back(x);
  }
  EXPECT_NEAR(nll_loss(m, batch, rng), 2.0 * std::log(5.0), 1e-10);
}

TEST(NllLoss, InvariantToPermutingEmbeddingHalf) {
  numkit::RngStream rng(20, 0);
  const BeliefModel m = perturbed_model(normal_config(2), rng, 0.3);
  std::vector<Matrix> batch = {random_points(16, 2, rng), random_points(16, 2, rng)};
  numkit::RngStream r1(1, 1), r2(1, 1);
  const double a = nll_loss(m, batch, r1);
  for (Matrix& x : batch) x.topRows(8).colwise().reverseInPlace();
  EXPECT_NEAR(nll_loss(m, batch, r2), a, 1e-12);
}

TEST(NllLoss, GradientMatchesFiniteDifferences) {
  numkit::RngStream rng(21, 0);
  for (TransformKind kind : {TransformKind::kAffine, TransformKind::kNlsq}) {
    for (bool box : {false, true}) {
      const auto report = testing::gradient_check(kind, box, true, rng);
      for (const auto& [group, err] : report) EXPECT_LE(err, 1e-3) << group;
    }
  }
}

TEST(Train, ZeroStepsReturnsInitialModel) {
  TrainConfig t;
  t.training_steps = 0;
  t.seed = 5;
  const ModelConfig c = testing::small_config(normal_config(2));
  const auto r = train(c, donut_source(), t);
  EXPECT_TRUE(r.losses.empty());
  EXPECT_EQ(r.model, initial_model(c, t));
}

TEST(Train, BitReproducible) {
  TrainConfig t;
  t.training_steps = 5;
  t.batch_size = 4;
  t.samples_per_distribution = 16;
  t.seed = 9;
  const ModelConfig c = testing::small_config(normal_config(2));
  const auto a = train(c, donut_source(), t);
  const auto b = train(c, donut_source(), t);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.model, b.model);
  t.seed = 10;
  EXPECT_NE(train(c, donut_source(), t).losses, a.losses);
}

TEST(Train, NanLossAbortsWithStep) {
  TrainConfig t;
  t.training_steps = 10;
  t.batch_size = 2;
  t.samples_per_distribution = 4;
  int calls = 0;
  const DistributionSource src = [&](numkit::RngStream& rng, int n) {
    Matrix x = random_points(n, 2, rng);
    if (++calls > 3 * t.batch_size) x(0, 0) = std::nan("");
    return x;
  };
  try {
    (void)train(testing::small_config(normal_config(2)), src, t);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.step(), 3);
  }
}

TEST(Train, DonutLossDecreases) {
  TrainConfig t;
  t.training_steps = 500;
  t.batch_size = 32;
  t.samples_per_distribution = 128;
  t.seed = 1;
  ModelConfig c = normal_config(2);
  c.embedding_dim = 8;
  c.embed_units = 64;
  c.flow_units = 32;
  c.flow_layers = 3;
  c.coupling_layers = 8;
  const auto r = train(c, donut_source(), t);
  double prev = std::numeric_limits<double>::infinity();
  for (int w = 0; w < 5; ++w) {
    const double avg = std::accumulate(r.losses.begin() + 100 * w, r.losses.begin() + 100 * (w + 1), 0.0) / 100.0;
    EXPECT_LT(avg, prev) << "window " << w;
    prev = avg;
  }
}

TEST(Checkpoint, RoundTripBitExact) {
  numkit::RngStream rng(22, 0);
  ModelConfig c = box_config(2, 5.0);
  c.dequantize = true;
  c.transform = TransformKind::kNlsq;
  const BeliefModel m = perturbed_model(c, rng, 0.5);
  const auto bytes = checkpoint_bytes(m);
  const BeliefModel back = checkpoint_from_bytes(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(checkpoint_bytes(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "nbf_ckpt_test.bin";
  save_checkpoint(path.string(), m);
  EXPECT_EQ(load_checkpoint(path.string()), m);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  numkit::RngStream rng(23, 0);
  const BeliefModel m = init_model(testing::small_config(normal_config(2)), rng);
  auto bytes = checkpoint_bytes(m);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(checkpoint_from_bytes(truncated), CheckpointError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(checkpoint_from_bytes(bad), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), CheckpointError);
}

TEST(Config, YamlRoundTripAndUnknownKeys) {
  ModelConfig c = box_config(2, 5.0);
  c.transform = TransformKind::kNlsq;
  c.domain_high = {5.0, 0.1 + 0.2};
  EXPECT_EQ(parse_model_config(to_yaml(c)), c);
  try {
    (void)parse_model_config("state_dim: 2\nembeding_dim: 4\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Sources, ExactGridBeliefSamplesFreeCells) {
  envs::GridSpec g;
  g.side = 5;
  g.obstacles = {{{1, 1, 0}, 2}};
  g.obs_flip_prob = 0.05;
  const auto src = exact_belief_source<envs::Gridworld>(
      [g](numkit::RngStream& rng) { return envs::Gridworld(g, envs::random_policy(g, 1e-5, rng)); }, 18);
  numkit::RngStream rng(24, 0);
  for (int i = 0; i < 20; ++i) {
    const Matrix x = src(rng, 32);
    ASSERT_EQ(x.rows(), 32);
    for (Index r = 0; r < x.rows(); ++r) {
      EXPECT_TRUE(g.is_free({static_cast<int>(x(r, 0)), static_cast<int>(x(r, 1)), 0}));
    }
  }
}

}  // namespace
}  // namespace nbf::beliefmodel
