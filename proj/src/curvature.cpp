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

#include "psgd/curvature.hpp"

#include <cmath>
#include <stdexcept>

#include "psgd/errors.hpp"

namespace psgd {

using detail::require;

void TangentPair::validate() const {
  require(delta_theta.size() == delta_g.size(), "TangentPair: length mismatch");
  if (!all_finite(delta_theta) || !all_finite(delta_g))
    throw NumericInputError("TangentPair: non-finite entry");
  require(max_norm(delta_theta) > 0.0, "TangentPair: delta_theta is all zero");
}

Damping Damping::parse(const std::string& text) {
  if (text == "none") return {};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ContractViolation("damping: expected none, trad:L or noncvx:L");
  const std::string kind = text.substr(0, colon);
  double lambda = 0.0;
  try {
    lambda = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ContractViolation("damping: bad lambda in '" + text + "'");
  }
  require(lambda >= 0.0 && std::isfinite(lambda), "damping: lambda must be >= 0");
  if (kind == "trad") return {Kind::kTraditional, lambda};
  if (kind == "noncvx") return {Kind::kNonconvex, lambda};
  throw ContractViolation("damping: unknown kind '" + kind + "'");
}

std::string Damping::to_string() const {
  switch (kind) {
    case Kind::kTraditional: return "trad:" + std::to_string(lambda);
    case Kind::kNonconvex: return "noncvx:" + std::to_string(lambda);
    case Kind::kNone: break;
  }
  return "none";
}

double ProbeConfig::default_sample_std(ProbeMode mode) {
  return mode == ProbeMode::kApproximate ? std::sqrt(kSinglePrecisionEps) : 1.0;
}

ProbeConfig ProbeConfig::for_mode(ProbeMode mode) {
  ProbeConfig cfg;
  cfg.mode = mode;
  cfg.sample_std = default_sample_std(mode);
  return cfg;
}

void ProbeConfig::validate() const {
  require(sample_std > 0.0 && std::isfinite(sample_std), "ProbeConfig: sample_std must be > 0");
  require(damping.lambda >= 0.0, "ProbeConfig: damping lambda must be >= 0");
}

ProbeMode parse_probe_mode(const std::string& text) {
  if (text == "approx") return ProbeMode::kApproximate;
  if (text == "exact") return ProbeMode::kExact;
  throw ContractViolation("probe mode must be approx or exact, got '" + text + "'");
}

std::string to_string(ProbeMode mode) {
  return mode == ProbeMode::kApproximate ? "approx" : "exact";
}

Vector sample_delta_theta(std::size_t dim, const ProbeConfig& cfg, Rng& rng) {
  require(dim >= 1, "sample_delta_theta: dim must be >= 1");
  return gaussian_vector(dim, cfg.sample_std, rng);
}

Vector approx_delta_g(const BoundEvaluator& batch, std::span<const double> theta,
                      std::span<const double> delta_theta,
                      std::span<const double> grad_at_theta) {
  require(theta.size() == delta_theta.size(), "approx_delta_g: length mismatch");
  Vector shifted(theta.begin(), theta.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += delta_theta[i];
  Vector g1 = batch.grad(shifted);
  Vector g0 = grad_at_theta.empty() ? batch.grad(theta) : Vector(grad_at_theta.begin(), grad_at_theta.end());
  require(g0.size() == g1.size() && g1.size() == theta.size(), "approx_delta_g: gradient length mismatch");
  if (!all_finite(g0) || !all_finite(g1))
    throw NumericEvaluationError("approx_delta_g: non-finite gradient");
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] -= g0[i];
  return g1;
}

Vector exact_delta_g(const BoundEvaluator& batch, std::span<const double> theta,
                     std::span<const double> delta_theta) {
  require(theta.size() == delta_theta.size(), "exact_delta_g: length mismatch");
  if (!batch.has_hvp()) throw CapabilityError("exact_delta_g: problem has no exact Hvp");
  Vector hv = batch.hvp(theta, delta_theta);
  if (!all_finite(hv)) throw NumericEvaluationError("exact_delta_g: non-finite Hvp");
  return hv;
}

TangentPair apply_damping(TangentPair pair, const ProbeConfig& cfg, Rng& rng) {
  require(cfg.damping.lambda >= 0.0, "apply_damping: lambda must be >= 0");
  const double lambda = cfg.damping.lambda;
  switch (cfg.damping.kind) {
    case Damping::Kind::kNone:
      break;
    case Damping::Kind::kTraditional:
      for (std::size_t i = 0; i < pair.size(); ++i) pair.delta_g[i] += lambda * pair.delta_theta[i];
      break;
    case Damping::Kind::kNonconvex: {
      const Vector fresh = sample_delta_theta(pair.size(), cfg, rng);
      for (std::size_t i = 0; i < pair.size(); ++i) pair.delta_g[i] += lambda * fresh[i];
      break;
    }
  }
  return pair;
}

TangentPair make_probe(const BoundEvaluator& batch, std::span<const double> theta,
                       const ProbeConfig& cfg, Rng& rng, std::span<const double> grad_at_theta) {
  TangentPair pair;
  pair.delta_theta = sample_delta_theta(theta.size(), cfg, rng);
  pair.delta_g = cfg.mode == ProbeMode::kExact
                     ? exact_delta_g(batch, theta, pair.delta_theta)
                     : approx_delta_g(batch, theta, pair.delta_theta, grad_at_theta);
  return apply_damping(std::move(pair), cfg, rng);
}

}  // namespace psgd
