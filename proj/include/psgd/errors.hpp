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

#include <stdexcept>
#include <string>

namespace psgd {

// Caller broke a precondition: shape mismatch, asymmetric input, bad config.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN or Inf found in an input that must be finite.
class NumericInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Loss, gradient or Hvp evaluation produced a non-finite value.
class NumericEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A triangular factor lost (numerically) its place on the group.
class DegenerateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Curvature statistic with a zero entry; the closed form is undefined.
class DegenerateCurvatureError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Requested operation not supported by the problem (e.g. exact Hvp).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace detail
}  // namespace psgd
