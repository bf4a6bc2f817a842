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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace psgd {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  // Interprets `v` as a rows x cols matrix stored column-major (the vec
  // convention used for matrix-shaped parameters).
  static Matrix unvec(std::span<const double> v, std::size_t rows,
                      std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Column-major flattening, inverse of unvec.
  Vector vec() const;
  Matrix transpose() const;
  double frobenius_norm() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

enum class Triangle { kUpper, kLower };

/// Square triangular matrix with strictly positive diagonal, i.e. an element
/// of the triangular Lie group. Stored densely; the opposite triangle is
/// kept at exactly zero.
class TriangularMatrix {
 public:
  TriangularMatrix() = default;
  // Validates shape, zero opposite triangle, finite entries, positive diagonal.
  TriangularMatrix(Matrix m, Triangle orientation);

  static TriangularMatrix identity(std::size_t n, Triangle orientation = Triangle::kUpper);

  std::size_t dim() const { return m_.rows(); }
  Triangle orientation() const { return orientation_; }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double min_diagonal() const;

 private:
  Matrix m_;
  Triangle orientation_ = Triangle::kUpper;
};

struct SymEigResult {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

// Vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_norm(std::span<const double> a);
double max_norm(const Matrix& m);
bool all_finite(std::span<const double> a);

Vector matvec(const Matrix& a, std::span<const double> x);
Vector matvec_t(const Matrix& a, std::span<const double> x);  // a^T x

// OpenMP kernels. Each output entry is accumulated in the same order as the
// reference kernels in psgd::serial, so results are bitwise identical.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a b^T
// Product of two upper triangular matrices; result is upper triangular.
Matrix triu_matmul(const Matrix& a, const Matrix& b);
// Q1 G Q2^T, the action of (Q2 kron Q1) on vec(G) (column-major vec).
Matrix kron_matvec(const Matrix& q2, const Matrix& q1, const Matrix& g);
// T^{-1} B, or T^{-T} B when transpose is set.
Matrix tri_solve_left(const TriangularMatrix& t, const Matrix& b, bool transpose);
// B T^{-1}, or B T^{-T} when transpose is set.
Matrix tri_solve_right(const Matrix& b, const TriangularMatrix& t, bool transpose);

// Solves T x = b (or T^T x = b).
Vector tri_solve(const TriangularMatrix& t, std::span<const double> b, bool transpose);

// Zeros the strictly lower part.
Matrix triu_project(const Matrix& m);

// Cyclic Jacobi; S must be symmetric to 1e-10 relative.
SymEigResult sym_eig(const Matrix& s);

// Kronecker product a (x) b, materialized. Only meant for tests and small
// diagnostics.
Matrix kron(const Matrix& a, const Matrix& b);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix triu_matmul(const Matrix& a, const Matrix& b);
Matrix kron_matvec(const Matrix& q2, const Matrix& q1, const Matrix& g);
Matrix tri_solve_left(const TriangularMatrix& t, const Matrix& b, bool transpose);
Matrix tri_solve_right(const Matrix& b, const TriangularMatrix& t, bool transpose);

}  // namespace serial
}  // namespace psgd
