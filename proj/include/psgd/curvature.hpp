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
#include <span>
#include <string>

#include "psgd/linalg.hpp"
#include "psgd/problems.hpp"
#include "psgd/random.hpp"

namespace psgd {

/// A probe pair: parameter perturbation and the resulting gradient
/// perturbation (an Hvp sample). The only statistic preconditioners learn from.
struct TangentPair {
  Vector delta_theta;
  Vector delta_g;

  std::size_t size() const { return delta_theta.size(); }
  // Equal lengths, finite entries, delta_theta not all zero.
  void validate() const;
};

enum class ProbeMode { kApproximate, kExact };

struct Damping {
  enum class Kind { kNone, kTraditional, kNonconvex };
  Kind kind = Kind::kNone;
  double lambda = 0.0;

  // "none", "trad:<lambda>", "noncvx:<lambda>"
  static Damping parse(const std::string& text);
  std::string to_string() const;
};

// Single precision machine epsilon.
inline constexpr double kSinglePrecisionEps = 0x1p-23;

struct ProbeConfig {
  ProbeMode mode = ProbeMode::kExact;
  double sample_std = 1.0;
  Damping damping;
  std::uint64_t rng_seed = 0;

  // sqrt(eps) for differencing, 1 for exact Hvps.
  static double default_sample_std(ProbeMode mode);
  static ProbeConfig for_mode(ProbeMode mode);
  void validate() const;
};

ProbeMode parse_probe_mode(const std::string& text);
std::string to_string(ProbeMode mode);

Vector sample_delta_theta(std::size_t dim, const ProbeConfig& cfg, Rng& rng);

// grad(theta + delta_theta) - grad(theta) on the batch bound in `batch`.
// Pass grad_at_theta when it is already known to save one evaluation.
Vector approx_delta_g(const BoundEvaluator& batch, std::span<const double> theta,
                      std::span<const double> delta_theta,
                      std::span<const double> grad_at_theta = {});

// Exact Hvp on the bound batch; no step-size restriction on delta_theta.
Vector exact_delta_g(const BoundEvaluator& batch, std::span<const double> theta,
                     std::span<const double> delta_theta);

// Traditional: delta_g += lambda * delta_theta. Nonconvex: delta_g += lambda *
// v with v an independent draw from the delta_theta distribution.
TangentPair apply_damping(TangentPair pair, const ProbeConfig& cfg, Rng& rng);

// Sample delta_theta, compute delta_g per cfg.mode, then damp.
TangentPair make_probe(const BoundEvaluator& batch, std::span<const double> theta,
                       const ProbeConfig& cfg, Rng& rng,
                       std::span<const double> grad_at_theta = {});

}  // namespace psgd
