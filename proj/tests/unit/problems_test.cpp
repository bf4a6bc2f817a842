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

#include "oracles.hpp"
#include "psgd/errors.hpp"
#include "psgd/problems.hpp"
#include "psgd/random.hpp"

namespace psgd {
namespace {

TEST(Quadratic, GradientExample) {
  auto p = make_quadratic(Matrix{{2, 0}, {0, -5}}, Vector{0, 0}, 0.0);
  auto e = p->bind_batch(0);
  EXPECT_EQ(e->grad(Vector{1, 1}), (Vector{2, -5}));
  EXPECT_DOUBLE_EQ(e->loss(Vector{1, 1}), -1.5);
  EXPECT_TRUE(p->has_exact_hvp());
  ASSERT_TRUE(p->ground_truth().has_value());
  EXPECT_EQ(p->ground_truth()->h, (Matrix{{2, 0}, {0, -5}}));
}

TEST(Quadratic, Contracts) {
  EXPECT_THROW(make_quadratic(Matrix{{1, 2}, {0, 1}}, Vector{0, 0}, 0.0), ContractViolation);
  EXPECT_THROW(make_quadratic(Matrix::identity(2), Vector{0}, 0.0), ContractViolation);
  EXPECT_THROW(make_quadratic(Matrix::identity(2), Vector{0, 0}, -1.0), ContractViolation);
  ParamLayout wrong;
  wrong.add_vector("a", 3);
  EXPECT_THROW(make_quadratic(Matrix::identity(2), Vector{0, 0}, 0.0, wrong), ContractViolation);
}

TEST(Quadratic, BatchIsPureFunctionOfSeed) {
  auto p = make_quadratic(Matrix{{1, 0}, {0, 3}}, Vector{1, 2}, 0.5);
  const Vector th{0.4, -1.1};
  EXPECT_EQ(p->bind_batch(77)->grad(th), p->bind_batch(77)->grad(th));
  EXPECT_NE(p->bind_batch(77)->grad(th), p->bind_batch(78)->grad(th));
  EXPECT_EQ(p->initial_theta(3), p->initial_theta(3));
}

TEST(Quadratic, NoiseAveragesToTruth) {
  // E[grad(theta)] = H theta + b over many batches.
  const Matrix h{{1, 0.5}, {0.5, 4}};
  const Vector b{1, -2};
  auto p = make_quadratic(h, b, 0.1);
  const Vector th{1.0, 0.5};
  const Vector expect = oracle::mul(oracle::Mat{{1, 0.5}, {0.5, 4}}, oracle::Vec{1.0, 0.5});
  Vector mean(2, 0.0), curv(2, 0.0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    auto e = p->bind_batch(mix_seed(k));
    const Vector g = e->grad(th), g0 = e->grad(Vector{0, 0});
    for (int i = 0; i < 2; ++i) {
      mean[i] += g[i] / n;
      curv[i] += (g[i] - g0[i]) / n;
    }
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(mean[i], expect[i] + b[i], 0.01 * std::abs(expect[i] + b[i]));
    EXPECT_NEAR(curv[i], expect[i], 0.01 * std::abs(expect[i]));
  }
}

TEST(Rosenbrock, Examples) {
  auto p = make_rosenbrock();
  auto e = p->bind_batch(0);
  EXPECT_EQ(e->loss(Vector{1, 1}), 0.0);
  EXPECT_EQ(e->grad(Vector{0, 0}), (Vector{-2, 0}));
  EXPECT_EQ(e->hvp(Vector{0, 0}, Vector{0, 1}), (Vector{0, 200}));
  EXPECT_EQ(p->initial_theta(0), (Vector{-1, 1}));
}

TEST(Rosenbrock, AgreesWithHandDerivedOracle) {
  auto p = make_rosenbrock();
  auto e = p->bind_batch(0);
  Rng rng = make_rng(21);
  for (int k = 0; k < 20; ++k) {
    const Vector th = gaussian_vector(2, 1.5, rng);
    const oracle::Vec g = oracle::rosenbrock_grad(th[0], th[1]);
    const Vector got = e->grad(th);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(got[i], g[i], 1e-10 * (1 + std::abs(g[i])));
    const Vector v = gaussian_vector(2, 1.0, rng);
    const oracle::Vec hv = oracle::mul(oracle::rosenbrock_hessian(th[0], th[1]), v);
    const Vector hvp = e->hvp(th, v);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(hvp[i], hv[i], 1e-10 * (1 + std::abs(hv[i])));
    EXPECT_LE(gradient_check(*e, th), 1e-6);
  }
}

TEST(Xor, ZeroWeightsGiveLog2) {
  auto p = make_xor_mlp(4);
  EXPECT_EQ(p->dim(), 4u * 3u + 5u);
  EXPECT_NEAR(p->bind_batch(0)->loss(Vector(p->dim(), 0.0)), std::log(2.0), 1e-15);
  EXPECT_THROW(make_xor_mlp(1), ContractViolation);
}

TEST(Xor, GradientAndHvpAgainstFiniteDifferences) {
  auto p = make_xor_mlp(3);
  auto e = p->bind_batch(0);
  Rng rng = make_rng(22);
  for (int k = 0; k < 20; ++k) {
    const Vector th = gaussian_vector(p->dim(), 1.0, rng);
    EXPECT_LE(gradient_check(*e, th), 1e-6);
    const Vector v = gaussian_vector(p->dim(), 1.0, rng);
    const double h = 1e-5;
    Vector tp = th, tm = th;
    for (std::size_t i = 0; i < th.size(); ++i) {
      tp[i] += h * v[i];
      tm[i] -= h * v[i];
    }
    const Vector gp = e->grad(tp), gm = e->grad(tm), hv = e->hvp(th, v);
    double err = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) err = std::max(err, std::abs((gp[i] - gm[i]) / (2 * h) - hv[i]));
    EXPECT_LE(err, 1e-6 * std::max(1.0, norm2(hv)));
  }
}

TEST(AdditionRnn, ZeroWeightsGiveMeanSquaredTarget) {
  // With all weights zero the prediction is 0 and the loss is E[t^2], t the
  // mean of two U(0, 1) values: Var = 1/24, mean 1/2, so E[t^2] = 7/24.
  auto p = make_addition_rnn(8, 4);
  const Vector zero(p->dim(), 0.0);
  double mean = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) mean += p->bind_batch(mix_seed(k + 1))->loss(zero) / n;
  EXPECT_NEAR(mean, 7.0 / 24.0, 0.01);
}

TEST(AdditionRnn, GradientCheckAndCapabilities) {
  auto p = make_addition_rnn(5, 3, 4);
  EXPECT_FALSE(p->has_exact_hvp());
  auto e = p->bind_batch(1);
  Rng rng = make_rng(23);
  for (int k = 0; k < 20; ++k) {
    const Vector th = gaussian_vector(p->dim(), 0.7, rng);
    EXPECT_LE(gradient_check(*e, th), 1e-5);
  }
  EXPECT_THROW(e->hvp(Vector(p->dim(), 0.0), Vector(p->dim(), 1.0)), CapabilityError);
  EXPECT_EQ(e->loss(p->initial_theta(1)), p->bind_batch(1)->loss(p->initial_theta(1)));
  EXPECT_THROW(make_addition_rnn(3, 3), ContractViolation);
}

TEST(Layouts, RoundTripAndBlocks) {
  auto x = make_xor_mlp(4);
  const ParamLayout& l = x->layout();
  ASSERT_EQ(l.tensor_count(), 2u);
  EXPECT_EQ(l.tensors()[0].name, "w1");
  EXPECT_EQ(l.tensors()[0].rows, 4u);
  EXPECT_EQ(l.tensors()[0].cols, 3u);
  EXPECT_TRUE(l.tensors()[0].augmented_input);
  EXPECT_EQ(*l.find("w2"), 1u);
  EXPECT_FALSE(l.find("w3").has_value());
  Rng rng = make_rng(24);
  const Vector th = gaussian_vector(l.total_size(), 1.0, rng);
  EXPECT_EQ(l.flatten(l.unflatten(th)), th);
  const Matrix w1 = l.unflatten(th, 0);
  EXPECT_EQ(w1(1, 0), th[1]);  // column-major
  EXPECT_EQ(w1(0, 1), th[4]);
}

}  // namespace
}  // namespace psgd
