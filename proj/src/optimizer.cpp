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

#include "psgd/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "psgd/errors.hpp"

namespace psgd {

using detail::require;

Method parse_method(const std::string& text) {
  if (text == "psgd") return Method::kPsgd;
  if (text == "sgd") return Method::kSgd;
  if (text == "rmsprop") return Method::kRmsprop;
  if (text == "esgd") return Method::kEsgd;
  throw ContractViolation("method must be psgd, sgd, rmsprop or esgd, got '" + text + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kPsgd: return "psgd";
    case Method::kSgd: return "sgd";
    case Method::kRmsprop: return "rmsprop";
    case Method::kEsgd: return "esgd";
  }
  return "?";
}

SkipSchedule parse_skip_schedule(const std::string& text) {
  if (text == "never") return SkipSchedule::kNever;
  if (text == "log10") return SkipSchedule::kLog10;
  throw ContractViolation("skip schedule must be never or log10, got '" + text + "'");
}

std::string to_string(SkipSchedule s) { return s == SkipSchedule::kNever ? "never" : "log10"; }

bool skip_admits(std::uint64_t t) {
  require(t >= 1, "skip_admits: t must be >= 1");
  std::uint64_t digits = 0;
  for (std::uint64_t x = t; x >= 10; x /= 10) ++digits;
  return t % std::max<std::uint64_t>(digits, 1) == 0;
}

void RunConfig::validate() const {
  require(mu > 0.0 && std::isfinite(mu), "RunConfig: mu must be > 0");
  require(precond_mu > 0.0 && precond_mu < 1.0, "RunConfig: precond_mu must be in (0, 1)");
  require(iters >= 1, "RunConfig: iters must be >= 1");
  if (clip_omega) require(*clip_omega > 0.0 && std::isfinite(*clip_omega), "RunConfig: clip must be > 0");
  probe.validate();
}

std::string RunConfig::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << "method=" << to_string(method) << " precond=" << precond.to_string()
     << " splu_order=" << precond.splu_order << " mu=" << mu << " precond_mu=" << precond_mu
     << " clip=";
  if (clip_omega)
    os << *clip_omega;
  else
    os << "none";
  os << " probe=" << to_string(probe.mode) << " sample_std=" << probe.sample_std
     << " damping=" << probe.damping.to_string() << " skip=" << to_string(skip)
     << " iters=" << iters << " seed=" << seed << " freeze_precond=" << freeze_precond
     << " rmsprop_beta=" << kRmspropBeta << " rmsprop_eps=" << kRmspropEps
     << " esgd_eps=" << kEsgdEps;
  return os.str();
}

OptimizerState make_state(const Problem& problem, const RunConfig& cfg) {
  OptimizerState s;
  if (cfg.method == Method::kPsgd) s.precond = make_preconditioner(problem.layout(), cfg.precond);
  if (cfg.method == Method::kRmsprop || cfg.method == Method::kEsgd)
    s.second_moment.assign(problem.dim(), 0.0);
  return s;
}

std::uint64_t batch_seed(std::uint64_t run_seed, std::uint64_t t) {
  return mix_seed(mix_seed(run_seed) + t);
}

namespace {

using Clock = std::chrono::steady_clock;

struct Evaluated {
  std::unique_ptr<BoundEvaluator> batch;
  Vector grad;
};

Evaluated evaluate(const Vector& theta, const Problem& problem, const RunConfig& cfg,
                   std::uint64_t t, TraceRow& row) {
  require(t >= 1, "step: iteration index must be >= 1");
  require(theta.size() == problem.dim(), "step: theta length does not match the problem");
  Evaluated e{problem.bind_batch(batch_seed(cfg.seed, t)), {}};
  row.iter = t;
  row.train_loss = e.batch->loss(theta);
  e.grad = e.batch->grad(theta);
  row.grad_norm = norm2(e.grad);
  return e;
}

bool admits(const RunConfig& cfg, std::uint64_t t) {
  return cfg.skip == SkipSchedule::kNever || skip_admits(t);
}

// theta -= mu * clip(direction); fills the remaining row fields.
void descend(Vector& theta, const Vector& direction, const RunConfig& cfg, TraceRow& row) {
  row.precond_grad_norm = norm2(direction);
  double scale = 1.0;
  if (cfg.clip_omega && row.precond_grad_norm > *cfg.clip_omega) {
    scale = *cfg.clip_omega / row.precond_grad_norm;
    row.clipped = true;
  }
  const double lr = cfg.mu * scale;
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * direction[i];
  if (!all_finite(theta)) throw NumericEvaluationError("parameter update is not finite");
}

void stamp(TraceRow& row, const RunConfig& cfg, Clock::time_point start) {
  if (cfg.timing)
    row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

}  // namespace

TraceRow psgd_step(Vector& theta, const Problem& problem, OptimizerState& state,
                   const RunConfig& cfg, std::uint64_t t, Rng& rng) {
  const auto start = Clock::now();
  TraceRow row;
  const Evaluated e = evaluate(theta, problem, cfg, t, row);
  const bool learn = !cfg.freeze_precond && admits(cfg, t);

  auto learn_into = [&](DirectSumPrecond& p) {
    const TangentPair pair = make_probe(*e.batch, theta, cfg.probe, rng, e.grad);
    p.update(pair, cfg.precond_mu);
  };

  Vector pg;
  if (learn && cfg.concurrent_precond) {
    // The step reads the incoming state; the update goes to a copy.
    DirectSumPrecond next = state.precond;
    std::exception_ptr errors[2];
#pragma omp parallel sections num_threads(2)
    {
#pragma omp section
      {
        try {
          learn_into(next);
        } catch (...) {
          errors[0] = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          pg = state.precond.apply(e.grad);
        } catch (...) {
          errors[1] = std::current_exception();
        }
      }
    }
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
    state.precond = std::move(next);
  } else {
    pg = state.precond.apply(e.grad);
    if (learn) learn_into(state.precond);
  }

  descend(theta, pg, cfg, row);
  stamp(row, cfg, start);
  return row;
}

TraceRow sgd_step(Vector& theta, const Problem& problem, OptimizerState&, const RunConfig& cfg,
                  std::uint64_t t, Rng&) {
  const auto start = Clock::now();
  TraceRow row;
  const Evaluated e = evaluate(theta, problem, cfg, t, row);
  descend(theta, e.grad, cfg, row);
  stamp(row, cfg, start);
  return row;
}

TraceRow rmsprop_step(Vector& theta, const Problem& problem, OptimizerState& state,
                      const RunConfig& cfg, std::uint64_t t, Rng&) {
  const auto start = Clock::now();
  TraceRow row;
  const Evaluated e = evaluate(theta, problem, cfg, t, row);
  Vector& v = state.second_moment;
  if (v.size() != theta.size()) v.assign(theta.size(), 0.0);
  Vector dir(theta.size());
  for (std::size_t i = 0; i < dir.size(); ++i) {
    v[i] = kRmspropBeta * v[i] + (1.0 - kRmspropBeta) * e.grad[i] * e.grad[i];
    dir[i] = e.grad[i] / (std::sqrt(v[i]) + kRmspropEps);
  }
  descend(theta, dir, cfg, row);
  stamp(row, cfg, start);
  return row;
}

TraceRow esgd_step(Vector& theta, const Problem& problem, OptimizerState& state,
                   const RunConfig& cfg, std::uint64_t t, Rng& rng) {
  const auto start = Clock::now();
  TraceRow row;
  const Evaluated e = evaluate(theta, problem, cfg, t, row);
  Vector& m2 = state.second_moment;
  if (m2.size() != theta.size()) m2.assign(theta.size(), 0.0);

  if (admits(cfg, t) || state.probes == 0) {
    ProbeConfig probe = cfg.probe;
    probe.mode = problem.has_exact_hvp() ? ProbeMode::kExact : ProbeMode::kApproximate;
    probe.sample_std = ProbeConfig::default_sample_std(probe.mode);
    const TangentPair pair = make_probe(*e.batch, theta, probe, rng, e.grad);
    const double n = static_cast<double>(++state.probes);
    for (std::size_t i = 0; i < m2.size(); ++i) {
      const double s = pair.delta_g[i] / probe.sample_std;
      m2[i] += (s * s - m2[i]) / n;
    }
  }

  Vector dir(theta.size());
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = e.grad[i] / (std::sqrt(m2[i]) + kEsgdEps);
  descend(theta, dir, cfg, row);
  stamp(row, cfg, start);
  return row;
}

TraceRow step(Vector& theta, const Problem& problem, OptimizerState& state, const RunConfig& cfg,
              std::uint64_t t, Rng& rng) {
  switch (cfg.method) {
    case Method::kPsgd: return psgd_step(theta, problem, state, cfg, t, rng);
    case Method::kSgd: return sgd_step(theta, problem, state, cfg, t, rng);
    case Method::kRmsprop: return rmsprop_step(theta, problem, state, cfg, t, rng);
    case Method::kEsgd: return esgd_step(theta, problem, state, cfg, t, rng);
  }
  throw ContractViolation("unknown method");
}

RunResult run(const Problem& problem, const RunConfig& cfg, std::optional<OptimizerState> initial) {
  cfg.validate();
  RunResult result;
  result.theta = problem.initial_theta(cfg.seed);
  result.state = initial ? std::move(*initial) : make_state(problem, cfg);
  if (cfg.method == Method::kPsgd)
    require(result.state.precond.dim() == problem.dim(), "run: preconditioner size does not match the problem");
  Rng rng = make_rng(cfg.seed, 1000 + cfg.probe.rng_seed);
  result.trace.reserve(cfg.iters);
  for (std::uint64_t t = 1; t <= cfg.iters; ++t) {
    try {
      result.trace.push_back(step(result.theta, problem, result.state, cfg, t, rng));
    } catch (const NumericEvaluationError& ex) {
      result.diverged = true;
      result.diagnostic = ex.what();
    } catch (const NumericInputError& ex) {
      result.diverged = true;
      result.diagnostic = ex.what();
    } catch (const DegenerateStateError& ex) {
      result.diverged = true;
      result.diagnostic = ex.what();
    }
    if (result.diverged) {
      TraceRow row;
      row.iter = t;
      row.train_loss = std::numeric_limits<double>::quiet_NaN();
      row.grad_norm = std::numeric_limits<double>::quiet_NaN();
      row.precond_grad_norm = std::numeric_limits<double>::quiet_NaN();
      result.trace.push_back(row);
      break;
    }
  }
  return result;
}

}  // namespace psgd
