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

// Single-threaded reference kernels. The OpenMP versions in linalg.cpp are
// tested for bitwise agreement against these.

#include "linalg_detail.hpp"
#include "psgd/linalg.hpp"

namespace psgd::serial {

using detail::require;

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix triu_matmul(const Matrix& a, const Matrix& b) {
  detail::check_triu_pair(a, b);
  const std::size_t n = a.rows();
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k <= j; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix kron_matvec(const Matrix& q2, const Matrix& q1, const Matrix& g) {
  detail::check_kron_shapes(q2, q1, g);
  return serial::matmul_nt(serial::matmul(q1, g), q2);
}

Matrix tri_solve_left(const TriangularMatrix& t, const Matrix& b, bool transpose) {
  require(t.dim() == b.rows(), "tri_solve_left: dimension mismatch");
  Matrix x = b;
  Vector col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    detail::tri_solve_inplace(t, col, transpose);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

Matrix tri_solve_right(const Matrix& b, const TriangularMatrix& t, bool transpose) {
  require(t.dim() == b.cols(), "tri_solve_right: dimension mismatch");
  Matrix x(b.rows(), b.cols());
  Vector row(b.cols());
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) row[j] = b(i, j);
    detail::tri_solve_inplace(t, row, !transpose);
    for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = row[j];
  }
  return x;
}

}  // namespace psgd::serial
