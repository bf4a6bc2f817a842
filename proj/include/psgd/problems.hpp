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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "psgd/layout.hpp"
#include "psgd/linalg.hpp"

namespace psgd {

/// Loss, gradient and (optionally) Hvp of one fixed mini-batch realization.
/// Everything evaluated through one evaluator sees the same batch, which is
/// what makes gradient differencing a valid Hvp estimate.
class BoundEvaluator {
 public:
  virtual ~BoundEvaluator() = default;

  virtual double loss(std::span<const double> theta) const = 0;
  virtual Vector grad(std::span<const double> theta) const = 0;

  virtual bool has_hvp() const { return false; }
  // Throws CapabilityError unless has_hvp().
  virtual Vector hvp(std::span<const double> theta, std::span<const double> v) const;
};

// Ground truth for quadratic problems: f = b^T theta + 0.5 theta^T H theta.
struct QuadraticTruth {
  Matrix h;
  Vector b;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual const ParamLayout& layout() const = 0;
  // Pure function of the seed.
  virtual std::unique_ptr<BoundEvaluator> bind_batch(std::uint64_t batch_seed) const = 0;
  virtual Vector initial_theta(std::uint64_t seed) const = 0;
  virtual bool has_exact_hvp() const = 0;
  virtual std::optional<QuadraticTruth> ground_truth() const { return std::nullopt; }

  std::size_t dim() const { return layout().total_size(); }
};

// Noisy quadratic. Each batch draws H_hat = H + noise_scale * S and
// b_hat = b + noise_scale * n with S symmetric (upper entries i.i.d. N(0,1))
// and n ~ N(0, I). The layout defaults to a single vector tensor.
std::unique_ptr<Problem> make_quadratic(Matrix h, Vector b, double noise_scale,
                                        std::optional<ParamLayout> layout = std::nullopt);

// 100 (y - x^2)^2 + (1 - x)^2, started from (-1, 1).
std::unique_ptr<Problem> make_rosenbrock();

// Two-layer tanh MLP on the four XOR points, logistic loss, full batch.
// Blocks: "w1" (hidden x 3, augmented input), "w2" (1 x hidden+1, augmented).
std::unique_ptr<Problem> make_xor_mlp(std::size_t hidden);

// Vanilla tanh RNN on the addition task. Each step feeds (value, marker, 1);
// the target is the mean of the two marked values (uniform on [0, 1]).
// Blocks: "w" (hidden x hidden+3, augmented), "v" (1 x hidden+1, augmented).
std::unique_ptr<Problem> make_addition_rnn(std::size_t seq_len, std::size_t hidden,
                                           std::size_t batch_size = 1);

// Central-difference check of grad against loss at theta. Returns the
// relative error ||g - g_fd|| / max(||g||, ||g_fd||, floor).
double gradient_check(const BoundEvaluator& eval, std::span<const double> theta, double h = 1e-6);

}  // namespace psgd
