// Copyright 2026 The PSGD Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "psgd/curvature.hpp"
#include "psgd/diagnostics.hpp"
#include "psgd/errors.hpp"
#include "psgd/problems.hpp"

namespace psgd {
namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

TEST(SampleDeltaTheta, UnitNormalStatistics) {
  Rng rng = make_rng(11);
  const ProbeConfig cfg = ProbeConfig::for_mode(ProbeMode::kExact);
  std::vector<double> xs[3];
  for (int k = 0; k < 100000; ++k) {
    const Vector v = sample_delta_theta(3, cfg, rng);
    for (int i = 0; i < 3; ++i) xs[i].push_back(v[i]);
  }
  for (const auto& x : xs) {
    const Moments m = moments(x);
    EXPECT_NEAR(m.mean, 0.0, 0.02);
    EXPECT_NEAR(m.var, 1.0, 0.05);
  }
}

TEST(SampleDeltaTheta, ApproximateModeUsesSqrtEps) {
  const ProbeConfig cfg = ProbeConfig::for_mode(ProbeMode::kApproximate);
  EXPECT_DOUBLE_EQ(cfg.sample_std, std::sqrt(kSinglePrecisionEps));
  Rng rng = make_rng(12);
  std::vector<double> x;
  for (int k = 0; k < 100000; ++k) x.push_back(sample_delta_theta(1, cfg, rng)[0]);
  EXPECT_NEAR(moments(x).var / kSinglePrecisionEps, 1.0, 0.05);
}

TEST(SampleDeltaTheta, DeterministicForSeed) {
  const ProbeConfig cfg;
  Rng a = make_rng(5), b = make_rng(5);
  EXPECT_EQ(sample_delta_theta(7, cfg, a), sample_delta_theta(7, cfg, b));
}

TEST(ApproxDeltaG, QuadraticIsExactHvp) {
  auto p = make_quadratic(Matrix{{2, 0}, {0, -5}}, Vector{0, 0}, 0.0);
  auto e = p->bind_batch(0);
  const Vector dg = approx_delta_g(*e, Vector{0, 0}, Vector{1e-4, 1e-4});
  EXPECT_NEAR(dg[0], 2e-4, 1e-15);
  EXPECT_NEAR(dg[1], -5e-4, 1e-15);
}

TEST(ApproxDeltaG, LinearLossGivesZero) {
  auto p = make_quadratic(Matrix(2, 2), Vector{3, -1}, 0.0);
  auto e = p->bind_batch(0);
  EXPECT_EQ(approx_delta_g(*e, Vector{1, 2}, Vector{0.01, 0.02}), (Vector{0, 0}));
}

TEST(ApproxDeltaG, RosenbrockMatchesExactAtOptimum) {
  auto p = make_rosenbrock();
  auto e = p->bind_batch(0);
  const Vector v{1e-5, 1e-5};
  const Vector approx = approx_delta_g(*e, Vector{1, 1}, v);
  const Vector exact = exact_delta_g(*e, Vector{1, 1}, v);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(approx[i], exact[i], 1e-3 * norm2(exact));
}

TEST(ExactDeltaG, Examples) {
  auto q = make_quadratic(Matrix{{2, 0}, {0, -5}}, Vector{0, 0}, 0.0);
  EXPECT_EQ(exact_delta_g(*q->bind_batch(0), Vector{0, 0}, Vector{1, 1}), (Vector{2, -5}));
  auto r = make_rosenbrock();
  EXPECT_EQ(exact_delta_g(*r->bind_batch(0), Vector{0, 0}, Vector{0, 1}), (Vector{0, 200}));
  auto rnn = make_addition_rnn(6, 3);
  const Vector th = rnn->initial_theta(0);
  EXPECT_THROW(exact_delta_g(*rnn->bind_batch(0), th, Vector(th.size(), 1.0)), CapabilityError);
}

TEST(TangentPair, Validation) {
  EXPECT_THROW((TangentPair{{0, 0}, {1, 1}}.validate()), ContractViolation);
  EXPECT_THROW((TangentPair{{1}, {1, 1}}.validate()), ContractViolation);
  EXPECT_THROW((TangentPair{{1, NAN}, {1, 1}}.validate()), NumericInputError);
  EXPECT_NO_THROW((TangentPair{{0, 1}, {0, 0}}.validate()));
}

TEST(Damping, ParseAndPrint) {
  EXPECT_EQ(Damping::parse("none").kind, Damping::Kind::kNone);
  const Damping t = Damping::parse("trad:0.1");
  EXPECT_EQ(t.kind, Damping::Kind::kTraditional);
  EXPECT_DOUBLE_EQ(t.lambda, 0.1);
  EXPECT_EQ(Damping::parse(t.to_string()).lambda, t.lambda);
  EXPECT_EQ(Damping::parse("noncvx:2").kind, Damping::Kind::kNonconvex);
  EXPECT_THROW(Damping::parse("trad"), ContractViolation);
  EXPECT_THROW(Damping::parse("trad:-1"), ContractViolation);
  EXPECT_THROW(Damping::parse("huber:1"), ContractViolation);
}

TEST(Damping, TraditionalExamples) {
  Rng rng = make_rng(0);
  ProbeConfig cfg;
  const TangentPair pair{{1, 2}, {3, 4}};
  cfg.damping = Damping{Damping::Kind::kTraditional, 0.0};
  const TangentPair same = apply_damping(pair, cfg, rng);
  EXPECT_EQ(same.delta_g, pair.delta_g);
  cfg.damping.lambda = 0.1;
  const TangentPair d = apply_damping(pair, cfg, rng);
  EXPECT_DOUBLE_EQ(d.delta_g[0], 3.1);
  EXPECT_DOUBLE_EQ(d.delta_g[1], 4.2);
  EXPECT_EQ(d.delta_theta, pair.delta_theta);
}

TEST(Damping, NonconvexNoiseIsIndependent) {
  // dg = lambda v with dtheta and v independent N(0, std^2).
  Rng rng = make_rng(13);
  ProbeConfig cfg;
  cfg.sample_std = 0.5;
  cfg.damping = Damping{Damping::Kind::kNonconvex, 0.3};
  std::vector<double> th, g;
  for (int k = 0; k < 100000; ++k) {
    TangentPair p{sample_delta_theta(1, cfg, rng), {0.0}};
    p = apply_damping(std::move(p), cfg, rng);
    th.push_back(p.delta_theta[0]);
    g.push_back(p.delta_g[0]);
  }
  const Moments mg = moments(g), mt = moments(th);
  EXPECT_NEAR(mg.mean, 0.0, 0.01);
  EXPECT_NEAR(mg.var / (0.09 * 0.25), 1.0, 0.05);
  double cov = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) cov += (g[i] - mg.mean) * (th[i] - mt.mean);
  cov /= static_cast<double>(g.size() - 1);
  EXPECT_LT(std::abs(cov / std::sqrt(mg.var * mt.var)), 0.02);
}

TEST(MakeProbe, ApproximateAgreesWithExactOnQuadratic) {
  auto p = make_quadratic(Matrix{{3, 1}, {1, -2}}, Vector{1, 1}, 0.0);
  auto e = p->bind_batch(0);
  Rng rng = make_rng(14);
  const Vector theta{0.3, -0.7};
  for (int k = 0; k < 20; ++k) {
    const Vector v = gaussian_vector(2, 1e-3, rng);
    const Vector a = approx_delta_g(*e, theta, v);
    const Vector x = exact_delta_g(*e, theta, v);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(a[i], x[i], 1e-9 * norm2(x) + 1e-15);
  }
}

TEST(MakeProbe, HvpLinearityAndSymmetry) {
  Rng rng = make_rng(15);
  auto q = make_quadratic(Matrix{{3, 1}, {1, -2}}, Vector{1, 1}, 0.1);
  auto r = make_rosenbrock();
  auto x = make_xor_mlp(3);
  for (const Problem* p : {q.get(), r.get(), x.get()}) {
    auto e = p->bind_batch(9);
    const Vector theta = p->initial_theta(4);
    EXPECT_LE(hvp_linearity_error(*e, theta, rng), 1e-8) << p->name();
    EXPECT_LE(hvp_symmetry_error(*e, theta, rng), 1e-8) << p->name();
  }
}

TEST(ProbeConfig, Validation) {
  ProbeConfig cfg;
  cfg.sample_std = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  EXPECT_EQ(parse_probe_mode("approx"), ProbeMode::kApproximate);
  EXPECT_EQ(parse_probe_mode(to_string(ProbeMode::kExact)), ProbeMode::kExact);
  EXPECT_THROW(parse_probe_mode("magic"), ContractViolation);
}

}  // namespace
}  // namespace psgd
