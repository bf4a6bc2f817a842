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
#include <optional>
#include <string>
#include <vector>

#include "psgd/curvature.hpp"
#include "psgd/preconditioner.hpp"
#include "psgd/problems.hpp"
#include "psgd/random.hpp"

namespace psgd {

enum class Method { kPsgd, kSgd, kRmsprop, kEsgd };
enum class SkipSchedule { kNever, kLog10 };

Method parse_method(const std::string& text);
std::string to_string(Method m);
SkipSchedule parse_skip_schedule(const std::string& text);
std::string to_string(SkipSchedule s);

// True iff t mod max(floor(log10 t), 1) == 0. Requires t >= 1.
bool skip_admits(std::uint64_t t);

inline constexpr double kRmspropBeta = 0.9;
inline constexpr double kRmspropEps = 1e-8;
inline constexpr double kEsgdEps = 1e-8;

struct RunConfig {
  Method method = Method::kPsgd;
  PrecondSpec precond;
  double mu = 0.1;
  double precond_mu = 0.01;
  std::optional<double> clip_omega;
  ProbeConfig probe;
  SkipSchedule skip = SkipSchedule::kNever;
  std::uint64_t iters = 100;
  std::uint64_t seed = 0;
  // Keeps P at its initial value (identity unless a checkpoint is loaded).
  bool freeze_precond = false;
  // Runs the preconditioner update and the preconditioned step concurrently.
  bool concurrent_precond = false;
  // Records wall time per row; off by default so traces are reproducible.
  bool timing = false;

  void validate() const;
  // One-line key=value description, used as the CSV header comment.
  std::string describe() const;
};

struct TraceRow {
  std::uint64_t iter = 0;
  double train_loss = 0.0;
  double grad_norm = 0.0;
  double precond_grad_norm = 0.0;
  bool clipped = false;
  std::int64_t wall_ns = 0;
};

/// Everything a method carries between iterations.
struct OptimizerState {
  DirectSumPrecond precond;
  Vector second_moment;  // RMSProp average of g^2, ESGD mean of (dg / std)^2
  std::uint64_t probes = 0;
};

OptimizerState make_state(const Problem& problem, const RunConfig& cfg);

// Mini-batch seed for iteration t.
std::uint64_t batch_seed(std::uint64_t run_seed, std::uint64_t t);

// One iteration at index t >= 1. theta and state are updated in place.
TraceRow psgd_step(Vector& theta, const Problem& problem, OptimizerState& state,
                   const RunConfig& cfg, std::uint64_t t, Rng& rng);
TraceRow sgd_step(Vector& theta, const Problem& problem, OptimizerState& state,
                  const RunConfig& cfg, std::uint64_t t, Rng& rng);
TraceRow rmsprop_step(Vector& theta, const Problem& problem, OptimizerState& state,
                      const RunConfig& cfg, std::uint64_t t, Rng& rng);
TraceRow esgd_step(Vector& theta, const Problem& problem, OptimizerState& state,
                   const RunConfig& cfg, std::uint64_t t, Rng& rng);

TraceRow step(Vector& theta, const Problem& problem, OptimizerState& state, const RunConfig& cfg,
              std::uint64_t t, Rng& rng);

struct RunResult {
  std::vector<TraceRow> trace;
  Vector theta;
  OptimizerState state;
  bool diverged = false;
  std::string diagnostic;
};

// Runs cfg.iters iterations from problem.initial_theta(cfg.seed). A
// non-finite loss, gradient or update stops the run; a final row with a NaN
// loss marks where it happened.
RunResult run(const Problem& problem, const RunConfig& cfg,
              std::optional<OptimizerState> initial = std::nullopt);

}  // namespace psgd
