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

#include "psgd/errors.hpp"
#include "psgd/optimizer.hpp"

namespace psgd {
namespace {

std::unique_ptr<Problem> diag_quadratic(Vector d, double noise = 0.0) {
  return make_quadratic(Matrix::diagonal(d), Vector(d.size(), 0.0), noise);
}

RunConfig psgd_config(const std::string& precond = "dense") {
  RunConfig cfg;
  cfg.precond = PrecondSpec::parse(precond);
  return cfg;
}

void expect_same_trace(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iter, b[i].iter);
    EXPECT_EQ(a[i].train_loss, b[i].train_loss) << "row " << i;
    EXPECT_EQ(a[i].grad_norm, b[i].grad_norm);
    EXPECT_EQ(a[i].precond_grad_norm, b[i].precond_grad_norm);
    EXPECT_EQ(a[i].clipped, b[i].clipped);
  }
}

TEST(SkipAdmits, Examples) {
  EXPECT_TRUE(skip_admits(1));
  EXPECT_TRUE(skip_admits(9));
  EXPECT_TRUE(skip_admits(57));
  EXPECT_TRUE(skip_admits(100));
  EXPECT_FALSE(skip_admits(101));
  EXPECT_TRUE(skip_admits(102));
  EXPECT_FALSE(skip_admits(1001));
  EXPECT_TRUE(skip_admits(1002));
  EXPECT_THROW(skip_admits(0), ContractViolation);
}

TEST(PsgdStep, FreshPreconditionerIsSgd) {
  auto p = diag_quadratic({2, 8});
  RunConfig cfg = psgd_config();
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(0);
  Vector theta{1, 1};
  const TraceRow row = psgd_step(theta, *p, s, cfg, 1, rng);
  EXPECT_NEAR(theta[0], 0.8, 1e-15);
  EXPECT_NEAR(theta[1], 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(row.train_loss, 5.0);
  EXPECT_FALSE(row.clipped);
}

TEST(PsgdStep, ClippingScalesTheStep) {
  auto p = diag_quadratic({1, 1});
  RunConfig cfg = psgd_config();
  cfg.clip_omega = 5.0;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(0);
  Vector theta{6, 8};  // gradient norm 10
  const TraceRow row = psgd_step(theta, *p, s, cfg, 1, rng);
  EXPECT_TRUE(row.clipped);
  EXPECT_NEAR(theta[0], 5.7, 1e-14);
  EXPECT_NEAR(theta[1], 7.6, 1e-14);
}

TEST(PsgdStep, ConvergedPreconditionerSolvesInOneStep) {
  auto p = diag_quadratic({2, 8});
  RunConfig cfg = psgd_config();
  cfg.precond_mu = 0.1;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(1);
  auto batch = p->bind_batch(0);
  for (int k = 0; k < 2000; ++k)
    s.precond.update(make_probe(*batch, Vector{0, 0}, cfg.probe, rng), cfg.precond_mu);
  cfg.mu = 1.0;
  cfg.freeze_precond = true;
  Vector theta{1, 1};
  psgd_step(theta, *p, s, cfg, 1, rng);
  EXPECT_LE(norm2(theta), 0.15 * std::sqrt(2.0));
}

TEST(PsgdStep, UpdateNormNeverExceedsMuOmega) {
  auto p = make_rosenbrock();
  RunConfig cfg = psgd_config();
  cfg.mu = 1.0;
  cfg.precond_mu = 0.1;
  cfg.clip_omega = 1.0;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(2);
  Vector theta = p->initial_theta(0);
  for (std::uint64_t t = 1; t <= 300; ++t) {
    const Vector before = theta;
    psgd_step(theta, *p, s, cfg, t, rng);
    Vector d(2);
    for (int i = 0; i < 2; ++i) d[i] = theta[i] - before[i];
    EXPECT_LE(norm2(d), cfg.mu * *cfg.clip_omega * (1 + 1e-12));
  }
}

TEST(Run, FrozenIdentityPreconditionerEqualsSgd) {
  auto p = diag_quadratic({1, 10, 0.5}, 0.1);
  RunConfig a = psgd_config();
  a.freeze_precond = true;
  a.iters = 200;
  a.seed = 3;
  RunConfig b = a;
  b.method = Method::kSgd;
  const RunResult ra = run(*p, a), rb = run(*p, b);
  expect_same_trace(ra.trace, rb.trace);
  EXPECT_EQ(ra.theta, rb.theta);
}

TEST(Run, DeterministicForSeed) {
  auto p = make_xor_mlp(3);
  RunConfig cfg = psgd_config("kron");
  cfg.iters = 100;
  cfg.seed = 7;
  const RunResult a = run(*p, cfg), b = run(*p, cfg);
  expect_same_trace(a.trace, b.trace);
  cfg.seed = 8;
  EXPECT_NE(run(*p, cfg).trace.back().train_loss, a.trace.back().train_loss);
}

TEST(Run, ConcurrentUpdateMatchesSerial) {
  auto p = diag_quadratic({1, 4, 9, 0.25}, 0.2);
  for (const char* kind : {"dense", "diag", "splu"}) {
    RunConfig cfg = psgd_config(kind);
    cfg.iters = 300;
    cfg.seed = 5;
    const RunResult serial = run(*p, cfg);
    cfg.concurrent_precond = true;
    const RunResult concurrent = run(*p, cfg);
    expect_same_trace(serial.trace, concurrent.trace);
    EXPECT_EQ(serial.theta, concurrent.theta) << kind;
  }
}

TEST(Run, PsgdDescendsMonotonicallyWhereSgdDiverges) {
  auto p = diag_quadratic({1, 100});
  RunConfig cfg = psgd_config();
  cfg.mu = 0.5;
  cfg.precond_mu = 0.1;
  cfg.clip_omega = 1.0;
  cfg.iters = 1000;
  const RunResult r = run(*p, cfg);
  ASSERT_FALSE(r.diverged);
  for (std::size_t i = 101; i < r.trace.size(); ++i)
    ASSERT_LE(r.trace[i].train_loss, r.trace[i - 1].train_loss) << "iter " << r.trace[i].iter;
  EXPECT_LT(r.trace.back().train_loss, 1e-12);

  RunConfig sgd = cfg;
  sgd.method = Method::kSgd;
  sgd.clip_omega.reset();
  const RunResult s = run(*p, sgd);
  EXPECT_TRUE(s.diverged);
  EXPECT_TRUE(std::isnan(s.trace.back().train_loss));
  EXPECT_LT(s.trace.size(), 1000u);
}

TEST(Run, SkipScheduleStillConverges) {
  auto p = diag_quadratic({1, 100});
  RunConfig cfg = psgd_config();
  cfg.mu = 0.5;
  cfg.precond_mu = 0.1;
  cfg.clip_omega = 1.0;
  cfg.skip = SkipSchedule::kLog10;
  cfg.iters = 1000;
  EXPECT_LT(run(*p, cfg).trace.back().train_loss, 1e-8);
}

TEST(Rmsprop, ConstantGradientLimit) {
  // Loss b^T theta has constant gradient b; v -> b^2 so the step -> mu sign(b).
  auto p = make_quadratic(Matrix(2, 2), Vector{3, -0.5}, 0.0);
  RunConfig cfg;
  cfg.method = Method::kRmsprop;
  cfg.mu = 0.01;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(0);
  Vector theta{0, 0};
  for (std::uint64_t t = 1; t <= 300; ++t) psgd::step(theta, *p, s, cfg, t, rng);
  const Vector before = theta;
  psgd::step(theta, *p, s, cfg, 301, rng);
  EXPECT_NEAR(theta[0] - before[0], -0.01, 1e-9);
  EXPECT_NEAR(theta[1] - before[1], 0.01, 1e-9);
}

TEST(Esgd, EquilibrationPreconditionerOnIndefiniteQuadratic) {
  // m2 -> E[(H v)_i^2] = h_i^2, so the direction -> g / |h|.
  auto p = diag_quadratic({2, -5});
  RunConfig cfg;
  cfg.method = Method::kEsgd;
  cfg.mu = 1e-6;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(4);
  Vector theta{1, 1};
  for (std::uint64_t t = 1; t <= 10000; ++t) psgd::step(theta, *p, s, cfg, t, rng);
  EXPECT_EQ(s.probes, 10000u);
  EXPECT_NEAR(1.0 / std::sqrt(s.second_moment[0]), 0.5, 0.025);
  EXPECT_NEAR(1.0 / std::sqrt(s.second_moment[1]), 0.2, 0.01);
}

TEST(Esgd, ProbesAtFirstIterationUnderSkip) {
  auto p = diag_quadratic({2, 3});
  RunConfig cfg;
  cfg.method = Method::kEsgd;
  cfg.skip = SkipSchedule::kLog10;
  OptimizerState s = make_state(*p, cfg);
  Rng rng = make_rng(0);
  Vector theta{1, 1};
  psgd::step(theta, *p, s, cfg, 1, rng);
  EXPECT_EQ(s.probes, 1u);
  psgd::step(theta, *p, s, cfg, 101, rng);
  EXPECT_EQ(s.probes, 1u);
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  cfg.mu = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = RunConfig{};
  cfg.precond_mu = 1.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = RunConfig{};
  cfg.clip_omega = -1.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  EXPECT_EQ(parse_method("rmsprop"), Method::kRmsprop);
  EXPECT_THROW(parse_method("adam"), ContractViolation);
  EXPECT_EQ(parse_skip_schedule(to_string(SkipSchedule::kLog10)), SkipSchedule::kLog10);
  EXPECT_NE(RunConfig{}.describe().find("mu=0.1"), std::string::npos);
}

TEST(Run, RejectsMismatchedInitialState) {
  auto p = diag_quadratic({1, 2});
  RunConfig cfg = psgd_config();
  OptimizerState s = make_state(*diag_quadratic({1, 2, 3}), cfg);
  EXPECT_THROW(run(*p, cfg, s), ContractViolation);
}

}  // namespace
}  // namespace psgd
