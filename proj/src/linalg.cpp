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

#include "psgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "linalg_detail.hpp"
#include "psgd/errors.hpp"

namespace psgd {

using detail::require;

// Below this many multiply-adds the OpenMP fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
  require(v.size() == rows * cols, "unvec: length does not match shape");
  Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[j * rows + i];
  return m;
}

Vector Matrix::vec() const {
  Vector v(size());
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) v[j * rows_ + i] = (*this)(i, j);
  return v;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const { return norm2(data_); }

bool Matrix::all_finite() const { return psgd::all_finite(data_); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "Matrix +=: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "Matrix -=: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

TriangularMatrix::TriangularMatrix(Matrix m, Triangle orientation)
    : m_(std::move(m)), orientation_(orientation) {
  require(m_.square(), "TriangularMatrix: matrix must be square");
  if (!m_.all_finite()) throw NumericInputError("TriangularMatrix: non-finite entry");
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    require(m_(i, i) > 0.0, "TriangularMatrix: diagonal must be strictly positive");
    for (std::size_t j = 0; j < n; ++j) {
      const bool outside = orientation_ == Triangle::kUpper ? j < i : j > i;
      require(!outside || m_(i, j) == 0.0, "TriangularMatrix: entry outside the triangle");
    }
  }
}

TriangularMatrix TriangularMatrix::identity(std::size_t n, Triangle orientation) {
  return TriangularMatrix(Matrix::identity(n), orientation);
}

double TriangularMatrix::min_diagonal() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) m = std::min(m, m_(i, i));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_norm(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double max_norm(const Matrix& m) { return max_norm(m.data()); }

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matvec: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
  require(a.rows() == x.size(), "matvec_t: shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(k, j) * x[k];
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  const std::size_t m = a.rows(), n = b.cols(), p = a.cols();
  Matrix c(m, n);
  const long long mm = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * n * p > kParallelWork)
  for (long long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  const std::size_t m = a.cols(), n = b.cols(), p = a.rows();
  Matrix c(m, n);
  const long long mm = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * n * p > kParallelWork)
  for (long long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t k = 0; k < p; ++k) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aki * b(k, j);
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  const std::size_t m = a.rows(), n = b.rows(), p = a.cols();
  Matrix c(m, n);
  const long long mm = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * n * p > kParallelWork)
  for (long long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
  return c;
}

Matrix triu_matmul(const Matrix& a, const Matrix& b) {
  detail::check_triu_pair(a, b);
  const std::size_t n = a.rows();
  Matrix c(n, n);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8) if (n * n * n / 6 > kParallelWork)
  for (long long ii = 0; ii < nn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t k = i; k < n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = k; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix kron_matvec(const Matrix& q2, const Matrix& q1, const Matrix& g) {
  detail::check_kron_shapes(q2, q1, g);
  return matmul_nt(matmul(q1, g), q2);
}

Vector tri_solve(const TriangularMatrix& t, std::span<const double> b, bool transpose) {
  require(t.dim() == b.size(), "tri_solve: dimension mismatch");
  if (!all_finite(b)) throw NumericInputError("tri_solve: non-finite right-hand side");
  Vector x(b.begin(), b.end());
  detail::tri_solve_inplace(t, x, transpose);
  return x;
}

Matrix tri_solve_left(const TriangularMatrix& t, const Matrix& b, bool transpose) {
  require(t.dim() == b.rows(), "tri_solve_left: dimension mismatch");
  if (!b.all_finite()) throw NumericInputError("tri_solve_left: non-finite right-hand side");
  detail::check_solvable(t);
  Matrix x = b;
  const long long nc = static_cast<long long>(b.cols());
#pragma omp parallel for schedule(static) if (b.rows() * b.rows() * b.cols() > kParallelWork)
  for (long long jj = 0; jj < nc; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    Vector col(b.rows());
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    detail::tri_solve_inplace(t, col, transpose);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

Matrix tri_solve_right(const Matrix& b, const TriangularMatrix& t, bool transpose) {
  require(t.dim() == b.cols(), "tri_solve_right: dimension mismatch");
  if (!b.all_finite()) throw NumericInputError("tri_solve_right: non-finite right-hand side");
  detail::check_solvable(t);
  Matrix x(b.rows(), b.cols());
  const long long nr = static_cast<long long>(b.rows());
#pragma omp parallel for schedule(static) if (b.cols() * b.cols() * b.rows() > kParallelWork)
  for (long long ii = 0; ii < nr; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Vector row(b.data().begin() + i * b.cols(), b.data().begin() + (i + 1) * b.cols());
    // x T = b  <=>  T^T x^T = b^T
    detail::tri_solve_inplace(t, row, !transpose);
    std::copy(row.begin(), row.end(), x.data().begin() + i * b.cols());
  }
  return x;
}

Matrix triu_project(const Matrix& m) {
  require(m.square(), "triu_project: matrix must be square");
  Matrix u = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) u(i, j) = 0.0;
  return u;
}

SymEigResult sym_eig(const Matrix& s) {
  require(s.square(), "sym_eig: matrix must be square");
  require(s.rows() <= 256, "sym_eig: dimension above 256");
  if (!s.all_finite()) throw NumericInputError("sym_eig: non-finite entry");
  const std::size_t n = s.rows();
  const double scale = s.frobenius_norm();
  require((s - s.transpose()).frobenius_norm() <= 1e-10 * scale, "sym_eig: matrix is not symmetric");

  Matrix a = s;
  Matrix v = Matrix::identity(n);
  const double tol = 1e-12 * scale;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymEigResult out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return k;
}

}  // namespace psgd
