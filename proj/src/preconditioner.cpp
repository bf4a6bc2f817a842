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

#include "psgd/preconditioner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "psgd/errors.hpp"

namespace psgd {

using detail::require;

namespace {

void check_step(double step) {
  require(step > 0.0 && step < 1.0, "preconditioner update: step must lie in (0, 1)");
}

void check_pair(const TangentPair& pair, std::size_t n) {
  require(pair.size() == n, "preconditioner update: pair length does not match preconditioner");
  pair.validate();
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double min_entry(std::span<const double> v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace

// ---------------------------------------------------------------- dense

DensePrecond::DensePrecond(std::size_t dim) : q_(TriangularMatrix::identity(dim)) {
  require(dim >= 1, "DensePrecond: dim must be >= 1");
}

DensePrecond::DensePrecond(TriangularMatrix q) : q_(std::move(q)) {
  require(q_.orientation() == Triangle::kUpper, "DensePrecond: Q must be upper triangular");
}

Vector DensePrecond::q_times(std::span<const double> v) const {
  require(v.size() == dim(), "DensePrecond: dimension mismatch");
  const Matrix& q = q_.matrix();
  Vector out(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    double s = 0.0;
    for (std::size_t j = i; j < dim(); ++j) s += q(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

Vector DensePrecond::q_inv_t_times(std::span<const double> v) const {
  require(v.size() == dim(), "DensePrecond: dimension mismatch");
  return tri_solve(q_, v, /*transpose=*/true);
}

Vector DensePrecond::apply(std::span<const double> g) const {
  return matvec_t(q_.matrix(), q_times(g));
}

Matrix DensePrecond::relative_gradient(const TangentPair& pair) const {
  check_pair(pair, dim());
  const Vector a = q_times(pair.delta_g);
  const Vector b = q_inv_t_times(pair.delta_theta);
  const std::size_t n = dim();
  Matrix grad(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) grad(i, j) = a[i] * a[j] - b[i] * b[j];
  return grad;
}

bool DensePrecond::update(const TangentPair& pair, double step) {
  check_step(step);
  const Matrix grad = relative_gradient(pair);
  const double norm = max_norm(grad);
  if (norm == 0.0) return true;
  Matrix next = q_.matrix();
  next -= (step / norm) * triu_matmul(grad, q_.matrix());
  if (!next.all_finite()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(next(i, i) >= kDegenerateDiagonal)) return false;
  q_ = TriangularMatrix(std::move(next), Triangle::kUpper);
  return true;
}

// ---------------------------------------------------------------- diagonal

DiagPrecond::DiagPrecond(std::size_t dim) : q_(dim, 1.0) {
  require(dim >= 1, "DiagPrecond: dim must be >= 1");
}

DiagPrecond::DiagPrecond(Vector q) : q_(std::move(q)) {
  require(!q_.empty(), "DiagPrecond: empty");
  for (double x : q_) require(x > 0.0 && std::isfinite(x), "DiagPrecond: entries must be positive");
}

Vector DiagPrecond::q_times(std::span<const double> v) const {
  require(v.size() == dim(), "DiagPrecond: dimension mismatch");
  Vector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = q_[i] * v[i];
  return out;
}

Vector DiagPrecond::q_inv_t_times(std::span<const double> v) const {
  require(v.size() == dim(), "DiagPrecond: dimension mismatch");
  Vector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = v[i] / q_[i];
  return out;
}

Vector DiagPrecond::apply(std::span<const double> g) const {
  require(g.size() == dim(), "DiagPrecond: dimension mismatch");
  Vector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = q_[i] * q_[i] * g[i];
  return out;
}

Vector DiagPrecond::relative_gradient(const TangentPair& pair) const {
  check_pair(pair, dim());
  Vector grad(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double a = q_[i] * pair.delta_g[i];
    const double b = pair.delta_theta[i] / q_[i];
    grad[i] = a * a - b * b;
  }
  return grad;
}

bool DiagPrecond::update(const TangentPair& pair, double step) {
  check_step(step);
  const Vector grad = relative_gradient(pair);
  const double norm = max_norm(grad);
  if (norm == 0.0) return true;
  const double mu = step / norm;
  Vector next = q_;
  for (std::size_t i = 0; i < dim(); ++i) next[i] -= mu * grad[i] * q_[i];
  if (!all_finite(next) || !(min_entry(next) >= kDegenerateDiagonal)) return false;
  q_ = std::move(next);
  return true;
}

// ---------------------------------------------------------------- Kronecker

KronPrecond::KronPrecond(std::size_t rows, std::size_t cols)
    : q1_(TriangularMatrix::identity(rows)), q2_(TriangularMatrix::identity(cols)) {
  require(rows >= 1 && cols >= 1, "KronPrecond: empty shape");
}

KronPrecond::KronPrecond(TriangularMatrix q1, TriangularMatrix q2)
    : q1_(std::move(q1)), q2_(std::move(q2)) {
  require(q1_.orientation() == Triangle::kUpper && q2_.orientation() == Triangle::kUpper,
          "KronPrecond: factors must be upper triangular");
}

Matrix KronPrecond::apply_matrix(const Matrix& g) const {
  const Matrix x = kron_matvec(q2_.matrix(), q1_.matrix(), g);
  return kron_matvec(q2_.matrix().transpose(), q1_.matrix().transpose(), x);
}

Vector KronPrecond::q_times(std::span<const double> v) const {
  return kron_matvec(q2_.matrix(), q1_.matrix(), Matrix::unvec(v, rows(), cols())).vec();
}

Vector KronPrecond::q_inv_t_times(std::span<const double> v) const {
  const Matrix x = tri_solve_left(q1_, Matrix::unvec(v, rows(), cols()), /*transpose=*/true);
  return tri_solve_right(x, q2_, /*transpose=*/false).vec();
}

Vector KronPrecond::apply(std::span<const double> g) const {
  return apply_matrix(Matrix::unvec(g, rows(), cols())).vec();
}

KronPrecond::Gradient KronPrecond::relative_gradient(const TangentPair& pair) const {
  check_pair(pair, dim());
  const Matrix a = kron_matvec(q2_.matrix(), q1_.matrix(), Matrix::unvec(pair.delta_g, rows(), cols()));
  const Matrix b = Matrix::unvec(q_inv_t_times(pair.delta_theta), rows(), cols());
  return {triu_project(matmul_nt(a, a) - matmul_nt(b, b)),
          triu_project(matmul_tn(a, a) - matmul_tn(b, b))};
}

bool KronPrecond::update(const TangentPair& pair, double step) {
  check_step(step);
  const Gradient grad = relative_gradient(pair);
  auto stepped = [step](const TriangularMatrix& q, const Matrix& g) {
    Matrix next = q.matrix();
    const double norm = max_norm(g);
    if (norm > 0.0) next -= (step / norm) * triu_matmul(g, q.matrix());
    return next;
  };
  Matrix n1 = stepped(q1_, grad.g1);
  Matrix n2 = stepped(q2_, grad.g2);
  if (!n1.all_finite() || !n2.all_finite()) return false;
  for (std::size_t i = 0; i < rows(); ++i)
    if (!(n1(i, i) >= kDegenerateDiagonal)) return false;
  for (std::size_t i = 0; i < cols(); ++i)
    if (!(n2(i, i) >= kDegenerateDiagonal)) return false;
  q1_ = TriangularMatrix(std::move(n1), Triangle::kUpper);
  q2_ = TriangularMatrix(std::move(n2), Triangle::kUpper);
  return true;
}

std::size_t KronPrecond::param_count() const {
  return table_param_count(PrecondKind::kKron, rows(), cols());
}

// ---------------------------------------------------------------- SCAN

ScanPrecond::ScanPrecond(std::size_t rows, std::size_t cols)
    : q1_(rows, 1.0), d2_(cols, 1.0), c2_(cols == 0 ? 0 : cols - 1, 0.0) {
  require(rows >= 1 && cols >= 1, "ScanPrecond: empty shape");
}

ScanPrecond::ScanPrecond(Vector q1, Vector d2, Vector c2)
    : q1_(std::move(q1)), d2_(std::move(d2)), c2_(std::move(c2)) {
  require(!q1_.empty() && !d2_.empty(), "ScanPrecond: empty shape");
  require(c2_.size() + 1 == d2_.size(), "ScanPrecond: c2 must have length N - 1");
  for (double x : q1_) require(x > 0.0 && std::isfinite(x), "ScanPrecond: q1 must be positive");
  for (double x : d2_) require(x > 0.0 && std::isfinite(x), "ScanPrecond: d2 must be positive");
  if (!all_finite(c2_)) throw NumericInputError("ScanPrecond: non-finite c2");
}

Matrix ScanPrecond::dense_q1() const { return Matrix::diagonal(q1_); }

Matrix ScanPrecond::dense_q2() const {
  Matrix q = Matrix::diagonal(d2_);
  for (std::size_t i = 0; i < c2_.size(); ++i) q(i, cols() - 1) = c2_[i];
  return q;
}

Vector ScanPrecond::q2_times(std::span<const double> x) const {
  require(x.size() == cols(), "scan_q2_matvec: length mismatch");
  const std::size_t last = cols() - 1;
  Vector out(cols());
  for (std::size_t i = 0; i < last; ++i) out[i] = d2_[i] * x[i] + c2_[i] * x[last];
  out[last] = d2_[last] * x[last];
  return out;
}

Matrix ScanPrecond::times_q2_t(const Matrix& g) const {
  const std::size_t last = cols() - 1;
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < last; ++j) out(i, j) = g(i, j) * d2_[j] + g(i, last) * c2_[j];
    out(i, last) = g(i, last) * d2_[last];
  }
  return out;
}

Matrix ScanPrecond::times_q2(const Matrix& g) const {
  const std::size_t last = cols() - 1;
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double s = g(i, last) * d2_[last];
    for (std::size_t j = 0; j < last; ++j) {
      out(i, j) = g(i, j) * d2_[j];
      s += g(i, j) * c2_[j];
    }
    out(i, last) = s;
  }
  return out;
}

Matrix ScanPrecond::times_q2_inv(const Matrix& g) const {
  // Y Q2 = G: leading columns are scaled, the last one back-substitutes.
  const std::size_t last = cols() - 1;
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double s = g(i, last);
    for (std::size_t j = 0; j < last; ++j) {
      out(i, j) = g(i, j) / d2_[j];
      s -= out(i, j) * c2_[j];
    }
    out(i, last) = s / d2_[last];
  }
  return out;
}

Matrix ScanPrecond::apply_matrix(const Matrix& g) const {
  require(g.rows() == rows() && g.cols() == cols(), "ScanPrecond: shape mismatch");
  Matrix x = times_q2_t(g);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) x(i, j) *= q1_[i] * q1_[i];
  return times_q2(x);
}

Vector ScanPrecond::q_times(std::span<const double> v) const {
  Matrix x = times_q2_t(Matrix::unvec(v, rows(), cols()));
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) x(i, j) *= q1_[i];
  return x.vec();
}

Vector ScanPrecond::q_inv_t_times(std::span<const double> v) const {
  Matrix x = Matrix::unvec(v, rows(), cols());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) x(i, j) /= q1_[i];
  return times_q2_inv(x).vec();
}

Vector ScanPrecond::apply(std::span<const double> g) const {
  return apply_matrix(Matrix::unvec(g, rows(), cols())).vec();
}

ScanPrecond::Gradient ScanPrecond::relative_gradient(const TangentPair& pair) const {
  check_pair(pair, dim());
  const Matrix a = Matrix::unvec(q_times(pair.delta_g), rows(), cols());
  const Matrix b = Matrix::unvec(q_inv_t_times(pair.delta_theta), rows(), cols());
  const std::size_t m = rows(), n = cols(), last = n - 1;
  Gradient grad{Vector(m, 0.0), Vector(n, 0.0), Vector(last, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = a(i, j) * a(i, j) - b(i, j) * b(i, j);
      grad.g1[i] += d;
      grad.g2_diag[j] += d;
    }
    for (std::size_t j = 0; j < last; ++j)
      grad.g2_last[j] += a(i, j) * a(i, last) - b(i, j) * b(i, last);
  }
  return grad;
}

bool ScanPrecond::update(const TangentPair& pair, double step) {
  check_step(step);
  const Gradient grad = relative_gradient(pair);
  Vector q1 = q1_;
  const double norm1 = max_norm(grad.g1);
  if (norm1 > 0.0) {
    const double mu = step / norm1;
    for (std::size_t i = 0; i < rows(); ++i) q1[i] -= mu * grad.g1[i] * q1_[i];
  }
  Vector d2 = d2_, c2 = c2_;
  const double norm2 = std::max(max_norm(grad.g2_diag), max_norm(grad.g2_last));
  if (norm2 > 0.0) {
    // Q2 <- Q2 - mu * grad2 * Q2, restricted to the diagonal + last column.
    const double mu = step / norm2;
    const std::size_t last = cols() - 1;
    for (std::size_t j = 0; j < last; ++j) {
      d2[j] -= mu * grad.g2_diag[j] * d2_[j];
      c2[j] -= mu * (grad.g2_diag[j] * c2_[j] + grad.g2_last[j] * d2_[last]);
    }
    d2[last] -= mu * grad.g2_diag[last] * d2_[last];
  }
  if (!all_finite(q1) || !all_finite(d2) || !all_finite(c2)) return false;
  if (!(min_entry(q1) >= kDegenerateDiagonal) || !(min_entry(d2) >= kDegenerateDiagonal))
    return false;
  q1_ = std::move(q1);
  d2_ = std::move(d2);
  c2_ = std::move(c2);
  return true;
}

// ---------------------------------------------------------------- dispatch

PrecondKind parse_precond_kind(const std::string& text) {
  if (text == "dense") return PrecondKind::kDense;
  if (text == "diag") return PrecondKind::kDiag;
  if (text == "splu") return PrecondKind::kSplu;
  if (text == "kron") return PrecondKind::kKron;
  if (text == "scan") return PrecondKind::kScan;
  throw ContractViolation("unknown preconditioner '" + text + "'");
}

std::string to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::kDense: return "dense";
    case PrecondKind::kDiag: return "diag";
    case PrecondKind::kSplu: return "splu";
    case PrecondKind::kKron: return "kron";
    case PrecondKind::kScan: return "scan";
  }
  return "?";
}

PrecondKind kind_of(const BlockPrecond& p) { return static_cast<PrecondKind>(p.index()); }

std::size_t dim(const BlockPrecond& p) {
  return std::visit([](const auto& x) { return x.dim(); }, p);
}

Vector apply(const BlockPrecond& p, std::span<const double> g) {
  return std::visit([&](const auto& x) { return x.apply(g); }, p);
}

bool update(BlockPrecond& p, const TangentPair& pair, double step) {
  return std::visit([&](auto& x) { return x.update(pair, step); }, p);
}

std::size_t param_count(const BlockPrecond& p) {
  return std::visit([](const auto& x) { return x.param_count(); }, p);
}

Vector q_times(const BlockPrecond& p, std::span<const double> v) {
  return std::visit([&](const auto& x) { return x.q_times(v); }, p);
}

Vector q_inv_t_times(const BlockPrecond& p, std::span<const double> v) {
  return std::visit([&](const auto& x) { return x.q_inv_t_times(v); }, p);
}

double criterion(const BlockPrecond& p, std::span<const TangentPair> pairs) {
  require(!pairs.empty(), "criterion: no pairs");
  double total = 0.0;
  for (const TangentPair& pair : pairs) {
    require(pair.size() == dim(p), "criterion: pair length mismatch");
    const Vector a = q_times(p, pair.delta_g);
    const Vector b = q_inv_t_times(p, pair.delta_theta);
    total += dot(a, a) + dot(b, b);
  }
  return total / static_cast<double>(pairs.size());
}

std::size_t table_param_count(PrecondKind kind, std::size_t m, std::size_t n, std::size_t r) {
  const std::size_t len = m * n;
  switch (kind) {
    case PrecondKind::kDense: return (len * len + len) / 2;
    case PrecondKind::kSplu: return 2 * (r + 1) * len - r * r - 2 * r;
    case PrecondKind::kKron: return (m * m + n * n + m + n) / 2;
    case PrecondKind::kDiag: return len;
    case PrecondKind::kScan: return m + 2 * n - 1;
  }
  return 0;
}

Vector closed_form_diagonal(std::span<const double> m2_theta, std::span<const double> m2_g) {
  require(m2_theta.size() == m2_g.size(), "closed_form_diagonal: length mismatch");
  Vector p(m2_g.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(m2_g[i] > 0.0)) throw DegenerateCurvatureError("closed_form_diagonal: zero gradient second moment");
    require(m2_theta[i] > 0.0, "closed_form_diagonal: m2_theta must be positive");
    p[i] = std::sqrt(m2_theta[i] / m2_g[i]);
  }
  return p;
}

Vector splu_matvec(const SpluPrecond& p, std::span<const double> v, SpluPrecond::Action which) {
  return p.matvec(v, which);
}

Vector scan_q2_matvec(const ScanPrecond& p, std::span<const double> x) { return p.q2_times(x); }

// ---------------------------------------------------------------- direct sum

DirectSumPrecond::DirectSumPrecond(std::vector<PrecondBlock> blocks, std::size_t total)
    : blocks_(std::move(blocks)), total_(total) {
  std::size_t cursor = 0;
  for (const PrecondBlock& b : blocks_) {
    require(b.offset == cursor, "DirectSumPrecond: blocks must tile the vector without gaps or overlap");
    require(b.size == psgd::dim(b.precond), "DirectSumPrecond: block '" + b.name + "' size mismatch");
    cursor += b.size;
  }
  require(cursor == total_, "DirectSumPrecond: blocks do not cover the vector");
}

Vector DirectSumPrecond::apply(std::span<const double> g) const {
  require(g.size() == total_, "DirectSumPrecond::apply: dimension mismatch");
  Vector out(total_);
  const long long nb = static_cast<long long>(blocks_.size());
  std::vector<std::exception_ptr> errors(blocks_.size());
#pragma omp parallel for schedule(dynamic) if (nb > 1 && total_ > 256)
  for (long long k = 0; k < nb; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      const PrecondBlock& b = blocks_[i];
      const Vector part = psgd::apply(b.precond, g.subspan(b.offset, b.size));
      std::copy(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(b.offset));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

std::size_t DirectSumPrecond::update(const TangentPair& pair, double step) {
  check_step(step);
  check_pair(pair, total_);
  const std::vector<TangentPair> parts = route(pair);
  std::size_t accepted = 0;
  const long long nb = static_cast<long long>(blocks_.size());
  std::vector<std::exception_ptr> errors(blocks_.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : accepted) if (nb > 1 && total_ > 256)
  for (long long k = 0; k < nb; ++k) {
    const auto i = static_cast<std::size_t>(k);
    // A block whose slice of delta_theta happens to be zero has nothing to learn.
    if (max_norm(parts[i].delta_theta) == 0.0) continue;
    try {
      if (psgd::update(blocks_[i].precond, parts[i], step)) ++accepted;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return accepted;
}

std::vector<TangentPair> DirectSumPrecond::route(const TangentPair& pair) const {
  require(pair.size() == total_, "direct_sum_route: layout mismatch");
  std::vector<TangentPair> parts;
  parts.reserve(blocks_.size());
  for (const PrecondBlock& b : blocks_) {
    const auto first = static_cast<std::ptrdiff_t>(b.offset);
    const auto last = static_cast<std::ptrdiff_t>(b.offset + b.size);
    parts.push_back({Vector(pair.delta_theta.begin() + first, pair.delta_theta.begin() + last),
                     Vector(pair.delta_g.begin() + first, pair.delta_g.begin() + last)});
  }
  return parts;
}

TangentPair DirectSumPrecond::scatter(std::span<const TangentPair> parts) const {
  require(parts.size() == blocks_.size(), "DirectSumPrecond::scatter: block count mismatch");
  TangentPair out{Vector(total_), Vector(total_)};
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require(parts[k].delta_theta.size() == blocks_[k].size && parts[k].delta_g.size() == blocks_[k].size,
            "DirectSumPrecond::scatter: block size mismatch");
    const auto off = static_cast<std::ptrdiff_t>(blocks_[k].offset);
    std::copy(parts[k].delta_theta.begin(), parts[k].delta_theta.end(), out.delta_theta.begin() + off);
    std::copy(parts[k].delta_g.begin(), parts[k].delta_g.end(), out.delta_g.begin() + off);
  }
  return out;
}

double DirectSumPrecond::criterion(std::span<const TangentPair> pairs) const {
  require(!pairs.empty(), "criterion: no pairs");
  // The criterion separates over blocks.
  double total = 0.0;
  for (const TangentPair& pair : pairs) {
    const std::vector<TangentPair> parts = route(pair);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const Vector a = q_times(blocks_[k].precond, parts[k].delta_g);
      const Vector b = q_inv_t_times(blocks_[k].precond, parts[k].delta_theta);
      total += dot(a, a) + dot(b, b);
    }
  }
  return total / static_cast<double>(pairs.size());
}

std::size_t DirectSumPrecond::param_count() const {
  std::size_t n = 0;
  for (const PrecondBlock& b : blocks_) n += psgd::param_count(b.precond);
  return n;
}

std::vector<TangentPair> direct_sum_route(const DirectSumPrecond& p, const TangentPair& pair) {
  return p.route(pair);
}

// ---------------------------------------------------------------- spec

PrecondSpec PrecondSpec::parse(const std::string& text) {
  PrecondSpec spec;
  const std::string prefix = "sum:";
  if (text.rfind(prefix, 0) != 0) {
    spec.kind = parse_precond_kind(text);
    return spec;
  }
  std::stringstream ss(text.substr(prefix.size()));
  std::string item;
  bool have_default = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, "precond: expected name=kind in '" + item + "'");
    const std::string name = item.substr(0, eq);
    const PrecondKind kind = parse_precond_kind(item.substr(eq + 1));
    if (name == "*") {
      spec.kind = kind;
      have_default = true;
    } else {
      spec.overrides[name] = kind;
    }
  }
  require(!spec.overrides.empty() || have_default, "precond: empty direct-sum spec");
  if (!have_default) spec.kind = PrecondKind::kKron;
  if (spec.overrides.empty()) spec.overrides["*"] = spec.kind;
  return spec;
}

std::string PrecondSpec::to_string() const {
  if (overrides.empty()) return psgd::to_string(kind);
  std::string out = "sum:*=" + psgd::to_string(kind);
  for (const auto& [name, k] : overrides)
    if (name != "*") out += "," + name + "=" + psgd::to_string(k);
  return out;
}

namespace {

BlockPrecond make_block(PrecondKind kind, const TensorSpec& t, std::size_t size, std::size_t order) {
  switch (kind) {
    case PrecondKind::kDense: return DensePrecond(size);
    case PrecondKind::kDiag: return DiagPrecond(size);
    case PrecondKind::kSplu: return SpluPrecond(size, order);
    case PrecondKind::kKron: return KronPrecond(t.rows, t.cols);
    case PrecondKind::kScan: return ScanPrecond(t.rows, t.cols);
  }
  throw ContractViolation("make_preconditioner: bad kind");
}

}  // namespace

DirectSumPrecond make_preconditioner(const ParamLayout& layout, const PrecondSpec& spec) {
  require(layout.total_size() > 0, "make_preconditioner: empty layout");
  for (const auto& [name, kind] : spec.overrides)
    require(name == "*" || layout.find(name).has_value(), "precond: no tensor named '" + name + "'");

  const bool whole = spec.overrides.empty() &&
                     (spec.kind == PrecondKind::kDense || spec.kind == PrecondKind::kDiag ||
                      (spec.kind == PrecondKind::kSplu && !spec.splu_per_tensor));
  std::vector<PrecondBlock> blocks;
  if (whole) {
    const TensorSpec all{"all", layout.total_size(), 1, false};
    blocks.push_back({"all", 0, all.size(), make_block(spec.kind, all, all.size(), spec.splu_order)});
  } else {
    for (std::size_t k = 0; k < layout.tensor_count(); ++k) {
      const TensorSpec& t = layout.tensors()[k];
      const auto it = spec.overrides.find(t.name);
      const PrecondKind kind = it == spec.overrides.end() ? spec.kind : it->second;
      blocks.push_back({t.name, layout.offset(k), t.size(), make_block(kind, t, t.size(), spec.splu_order)});
    }
  }
  return DirectSumPrecond(std::move(blocks), layout.total_size());
}

}  // namespace psgd
