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

#include <span>

#include "psgd/errors.hpp"
#include "psgd/linalg.hpp"

namespace psgd::detail {

inline void check_solvable(const TriangularMatrix& t) {
  if (!(t.min_diagonal() >= 1e-300))
    throw DegenerateStateError("triangular solve: diagonal entry below 1e-300");
}

// Overwrites x with T^{-1} x (or T^{-T} x).
inline void tri_solve_inplace(const TriangularMatrix& t, std::span<double> x, bool transpose) {
  check_solvable(t);
  const Matrix& m = t.matrix();
  const std::size_t n = t.dim();
  auto at = [&](std::size_t i, std::size_t j) { return transpose ? m(j, i) : m(i, j); };
  const bool upper = (t.orientation() == Triangle::kUpper) != transpose;
  if (upper) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= at(ii, j) * x[j];
      x[ii] = s / at(ii, ii);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t j = 0; j < i; ++j) s -= at(i, j) * x[j];
      x[i] = s / at(i, i);
    }
  }
}

inline void check_triu_pair(const Matrix& a, const Matrix& b) {
  require(a.square() && b.square() && a.rows() == b.rows(), "triu_matmul: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      require(a(i, j) == 0.0 && b(i, j) == 0.0, "triu_matmul: operand is not upper triangular");
}

inline void check_kron_shapes(const Matrix& q2, const Matrix& q1, const Matrix& g) {
  require(q1.square() && q1.rows() == g.rows(), "kron_matvec: Q1 must be M x M for M x N gradient");
  require(q2.square() && q2.rows() == g.cols(), "kron_matvec: Q2 must be N x N for M x N gradient");
}

}  // namespace psgd::detail
