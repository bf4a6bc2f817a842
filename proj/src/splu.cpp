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

#include <algorithm>
#include <cmath>

#include "psgd/errors.hpp"
#include "psgd/preconditioner.hpp"

namespace psgd {

using detail::require;

namespace {

Vector head(std::span<const double> v, std::size_t r) { return Vector(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r)); }
Vector tail(std::span<const double> v, std::size_t r) { return Vector(v.begin() + static_cast<std::ptrdiff_t>(r), v.end()); }

Vector join(const Vector& a, const Vector& b) {
  Vector out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Triangular times vector for the small leading blocks.
Vector tri_times(const TriangularMatrix& t, std::span<const double> v, bool transpose) {
  return transpose ? matvec_t(t.matrix(), v) : matvec(t.matrix(), v);
}

bool diagonal_ok(const Matrix& m) {
  if (!m.all_finite()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (!(m(i, i) >= kDegenerateDiagonal)) return false;
  return true;
}

bool entries_ok(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x >= kDegenerateDiagonal && std::isfinite(x); });
}

}  // namespace

SpluPrecond::SpluPrecond(std::size_t dim, std::size_t order) : n_(dim), r_(std::min(order, dim)) {
  require(dim >= 1, "SpluPrecond: dim must be >= 1");
  f_.l1 = TriangularMatrix::identity(r_, Triangle::kLower);
  f_.l2 = Matrix(n_ - r_, r_);
  f_.l3 = Vector(n_ - r_, 1.0);
  f_.u1 = TriangularMatrix::identity(r_, Triangle::kUpper);
  f_.u2 = Matrix(r_, n_ - r_);
  f_.u3 = Vector(n_ - r_, 1.0);
}

SpluPrecond::SpluPrecond(Factors factors) : f_(std::move(factors)) {
  r_ = f_.l1.dim();
  n_ = r_ + f_.l3.size();
  require(n_ >= 1, "SpluPrecond: empty");
  require(f_.l1.orientation() == Triangle::kLower && f_.u1.orientation() == Triangle::kUpper,
          "SpluPrecond: L1 must be lower and U1 upper triangular");
  require(f_.u1.dim() == r_, "SpluPrecond: U1 size mismatch");
  require(f_.l2.rows() == n_ - r_ && f_.l2.cols() == r_, "SpluPrecond: L2 shape mismatch");
  require(f_.u2.rows() == r_ && f_.u2.cols() == n_ - r_, "SpluPrecond: U2 shape mismatch");
  require(f_.u3.size() == n_ - r_, "SpluPrecond: u3 length mismatch");
  for (double x : f_.l3) require(x > 0.0 && std::isfinite(x), "SpluPrecond: l3 must be positive");
  for (double x : f_.u3) require(x > 0.0 && std::isfinite(x), "SpluPrecond: u3 must be positive");
  if (!f_.l2.all_finite() || !f_.u2.all_finite()) throw NumericInputError("SpluPrecond: non-finite factor");
}

Vector SpluPrecond::matvec(std::span<const double> v, Action which) const {
  require(v.size() == n_, "splu_matvec: dimension mismatch");
  const Vector v1 = head(v, r_), v2 = tail(v, r_);
  const std::size_t m = n_ - r_;

  // L v, L^T v, L^{-1} v, L^{-T} v
  auto l_times = [&](const Vector& x1, const Vector& x2) {
    Vector y1 = tri_times(f_.l1, x1, false);
    Vector y2 = psgd::matvec(f_.l2, x1);
    for (std::size_t i = 0; i < m; ++i) y2[i] += f_.l3[i] * x2[i];
    return join(y1, y2);
  };
  auto lt_times = [&](const Vector& x1, const Vector& x2) {
    Vector y1 = tri_times(f_.l1, x1, true);
    const Vector t = matvec_t(f_.l2, x2);
    for (std::size_t i = 0; i < r_; ++i) y1[i] += t[i];
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = f_.l3[i] * x2[i];
    return join(y1, y2);
  };
  auto l_inv = [&](const Vector& x1, const Vector& x2) {
    // [L1^{-1}, 0; -diag(l3)^{-1} L2 L1^{-1}, diag(l3)^{-1}]
    Vector y1 = tri_solve(f_.l1, x1, false);
    const Vector t = psgd::matvec(f_.l2, y1);
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = (x2[i] - t[i]) / f_.l3[i];
    return join(y1, y2);
  };
  auto l_inv_t = [&](const Vector& x1, const Vector& x2) {
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = x2[i] / f_.l3[i];
    Vector rhs = x1;
    const Vector t = matvec_t(f_.l2, y2);
    for (std::size_t i = 0; i < r_; ++i) rhs[i] -= t[i];
    return join(tri_solve(f_.l1, rhs, true), y2);
  };
  // U v, U^T v, U^{-1} v, U^{-T} v
  auto u_times = [&](const Vector& x1, const Vector& x2) {
    Vector y1 = tri_times(f_.u1, x1, false);
    const Vector t = psgd::matvec(f_.u2, x2);
    for (std::size_t i = 0; i < r_; ++i) y1[i] += t[i];
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = f_.u3[i] * x2[i];
    return join(y1, y2);
  };
  auto ut_times = [&](const Vector& x1, const Vector& x2) {
    Vector y1 = tri_times(f_.u1, x1, true);
    Vector y2 = matvec_t(f_.u2, x1);
    for (std::size_t i = 0; i < m; ++i) y2[i] += f_.u3[i] * x2[i];
    return join(y1, y2);
  };
  auto u_inv = [&](const Vector& x1, const Vector& x2) {
    // [U1^{-1}, -U1^{-1} U2 diag(u3)^{-1}; 0, diag(u3)^{-1}]
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = x2[i] / f_.u3[i];
    Vector rhs = x1;
    const Vector t = psgd::matvec(f_.u2, y2);
    for (std::size_t i = 0; i < r_; ++i) rhs[i] -= t[i];
    return join(tri_solve(f_.u1, rhs, false), y2);
  };
  auto u_inv_t = [&](const Vector& x1, const Vector& x2) {
    Vector y1 = tri_solve(f_.u1, x1, true);
    const Vector t = matvec_t(f_.u2, y1);
    Vector y2(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = (x2[i] - t[i]) / f_.u3[i];
    return join(y1, y2);
  };
  auto split = [&](const Vector& x) { return std::pair{head(x, r_), tail(x, r_)}; };

  switch (which) {
    case Action::kQ: {  // L (U v)
      auto [a1, a2] = split(u_times(v1, v2));
      return l_times(a1, a2);
    }
    case Action::kQt: {  // U^T (L^T v)
      auto [a1, a2] = split(lt_times(v1, v2));
      return ut_times(a1, a2);
    }
    case Action::kQinv: {  // U^{-1} (L^{-1} v)
      auto [a1, a2] = split(l_inv(v1, v2));
      return u_inv(a1, a2);
    }
    case Action::kQinvT: {  // L^{-T} (U^{-T} v)
      auto [a1, a2] = split(u_inv_t(v1, v2));
      return l_inv_t(a1, a2);
    }
  }
  throw ContractViolation("splu_matvec: bad action");
}

Vector SpluPrecond::apply(std::span<const double> g) const {
  return matvec(matvec(g, Action::kQ), Action::kQt);
}

namespace {

// Vectors from which both relative gradients are assembled.
struct Moments {
  Vector a;     // Q dg
  Vector b;     // Q^{-T} dtheta
  Vector pg;    // P dg
  Vector pinv;  // P^{-1} dtheta
};

Moments moments(const SpluPrecond& p, const TangentPair& pair) {
  require(pair.size() == p.dim(), "SpluPrecond: pair length mismatch");
  pair.validate();
  Moments mo;
  mo.a = p.matvec(pair.delta_g, SpluPrecond::Action::kQ);
  mo.b = p.matvec(pair.delta_theta, SpluPrecond::Action::kQinvT);
  mo.pg = p.matvec(mo.a, SpluPrecond::Action::kQt);
  mo.pinv = p.matvec(mo.b, SpluPrecond::Action::kQinv);
  return mo;
}

SpluPrecond::Gradient assemble(const Moments& mo, const TangentPair& pair, std::size_t r) {
  const Vector& a = mo.a;
  const Vector& b = mo.b;
  const Vector& pg = mo.pg;
  const Vector& pinv = mo.pinv;
  const Vector& dg = pair.delta_g;
  const Vector& dt = pair.delta_theta;
  const std::size_t m = a.size() - r;

  SpluPrecond::Gradient g{Matrix(r, r), Matrix(m, r), Vector(m), Matrix(r, r), Matrix(r, m), Vector(m)};
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j <= i; ++j) g.e1(i, j) = a[i] * a[j] - b[i] * b[j];
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < r; ++j) g.e2(i, j) = a[r + i] * a[j] - b[r + i] * b[j];
    g.e3[i] = a[r + i] * a[r + i] - b[r + i] * b[r + i];
  }
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i; j < r; ++j) g.f1(i, j) = pg[i] * dg[j] - dt[i] * pinv[j];
    for (std::size_t j = 0; j < m; ++j) g.f2(i, j) = pg[i] * dg[r + j] - dt[i] * pinv[r + j];
  }
  for (std::size_t j = 0; j < m; ++j) g.f3[j] = pg[r + j] * dg[r + j] - dt[r + j] * pinv[r + j];
  return g;
}

}  // namespace

SpluPrecond::Gradient SpluPrecond::relative_gradient(const TangentPair& pair) const {
  return assemble(moments(*this, pair), pair, r_);
}

bool SpluPrecond::update(const TangentPair& pair, double step) {
  require(step > 0.0 && step < 1.0, "preconditioner update: step must lie in (0, 1)");
  const Moments mo = moments(*this, pair);
  const Gradient g = assemble(mo, pair, r_);
  const std::size_t m = n_ - r_;

  const double norm_l = std::max({max_norm(g.e1), max_norm(g.e2), max_norm(g.e3)});
  const double norm_u = std::max({max_norm(g.f1), max_norm(g.f2), max_norm(g.f3)});

  Matrix l1 = f_.l1.matrix(), l2 = f_.l2;
  Vector l3 = f_.l3;
  if (norm_l > 0.0) {
    // L <- L - mu grad_L L:
    //   L1 -= mu E1 L1;  L2 -= mu (E2 L1 + diag(e3) L2);  l3 -= mu e3 l3
    // E2 = a2 a1^T - b2 b1^T is rank two, so E2 L1 costs O(r m).
    const double mu = step / norm_l;
    l1 -= mu * matmul(g.e1, f_.l1.matrix());
    const Vector la = matvec_t(f_.l1.matrix(), head(mo.a, r_));
    const Vector lb = matvec_t(f_.l1.matrix(), head(mo.b, r_));
    for (std::size_t i = 0; i < m; ++i) {
      const double ai = mo.a[r_ + i], bi = mo.b[r_ + i];
      for (std::size_t j = 0; j < r_; ++j)
        l2(i, j) -= mu * (ai * la[j] - bi * lb[j] + g.e3[i] * f_.l2(i, j));
      l3[i] -= mu * g.e3[i] * f_.l3[i];
    }
  }
  Matrix u1 = f_.u1.matrix(), u2 = f_.u2;
  Vector u3 = f_.u3;
  if (norm_u > 0.0) {
    // U <- U - mu U grad_U:
    //   U1 -= mu U1 F1;  U2 -= mu (U1 F2 + U2 diag(f3));  u3 -= mu u3 f3
    // F2 = pg1 dg2^T - dtheta1 pinv2^T is rank two as well.
    const double mu = step / norm_u;
    u1 -= mu * matmul(f_.u1.matrix(), g.f1);
    const Vector upg = psgd::matvec(f_.u1.matrix(), head(mo.pg, r_));
    const Vector udt = psgd::matvec(f_.u1.matrix(), head(pair.delta_theta, r_));
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < m; ++j)
        u2(i, j) -= mu * (upg[i] * pair.delta_g[r_ + j] - udt[i] * mo.pinv[r_ + j] + f_.u2(i, j) * g.f3[j]);
    for (std::size_t i = 0; i < m; ++i) u3[i] -= mu * f_.u3[i] * g.f3[i];
  }
  if (!diagonal_ok(l1) || !diagonal_ok(u1) || !entries_ok(l3) || !entries_ok(u3)) return false;
  if (!l2.all_finite() || !u2.all_finite()) return false;
  f_ = Factors{TriangularMatrix(std::move(l1), Triangle::kLower), std::move(l2), std::move(l3),
               TriangularMatrix(std::move(u1), Triangle::kUpper), std::move(u2), std::move(u3)};
  return true;
}

Matrix SpluPrecond::dense_l() const {
  Matrix l(n_, n_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j <= i; ++j) l(i, j) = f_.l1(i, j);
  for (std::size_t i = 0; i < n_ - r_; ++i) {
    for (std::size_t j = 0; j < r_; ++j) l(r_ + i, j) = f_.l2(i, j);
    l(r_ + i, r_ + i) = f_.l3[i];
  }
  return l;
}

Matrix SpluPrecond::dense_u() const {
  Matrix u(n_, n_);
  for (std::size_t i = 0; i < r_; ++i) {
    for (std::size_t j = i; j < r_; ++j) u(i, j) = f_.u1(i, j);
    for (std::size_t j = 0; j < n_ - r_; ++j) u(i, r_ + j) = f_.u2(i, j);
  }
  for (std::size_t i = 0; i < n_ - r_; ++i) u(r_ + i, r_ + i) = f_.u3[i];
  return u;
}

std::size_t SpluPrecond::param_count() const {
  return table_param_count(PrecondKind::kSplu, n_, 1, r_);
}

}  // namespace psgd
