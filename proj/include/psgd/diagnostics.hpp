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
#include <vector>

#include "psgd/curvature.hpp"
#include "psgd/preconditioner.hpp"
#include "psgd/problems.hpp"
#include "psgd/random.hpp"

namespace psgd {

/// One line of a verification report. A check passes when value <= tolerance.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

enum class Suite { kGradcheck, kFixedpoint, kGroups, kInverses };

Suite parse_suite(const std::string& text);
std::string to_string(Suite s);
std::vector<CheckResult> run_suite(Suite suite, std::uint64_t seed = 0);

// Materialized factor and preconditioner. Small dimensions only.
Matrix dense_q(const BlockPrecond& p);
Matrix dense_p(const BlockPrecond& p);

// True when every triangular diagonal entry is finite and positive.
bool on_group(const BlockPrecond& p);

// Relative mismatch between the analytic relative gradient and a central
// difference of the sample criterion along one random group direction E:
//   d/dh c((I + hE) Q) at 0 = 2 tr(E^T grad)
// (for the U factor of SPLU the perturbation is U (I + hE)).
double criterion_gradient_error(const BlockPrecond& p, std::span<const TangentPair> pairs, Rng& rng,
                                double h = 1e-6);

// Relative errors of the Hvp's linearity and symmetry at theta.
double hvp_linearity_error(const BoundEvaluator& eval, std::span<const double> theta, Rng& rng);
double hvp_symmetry_error(const BoundEvaluator& eval, std::span<const double> theta, Rng& rng);

// Pairs (dtheta, H dtheta + noise * n) with dtheta ~ N(0, I) and n ~ N(0, I).
std::vector<TangentPair> quadratic_pairs(const Matrix& h, std::size_t count, double noise, Rng& rng);

}  // namespace psgd
