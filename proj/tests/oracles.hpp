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

// Brute-force reference computations for tests. Everything here works on
// plain nested vectors and never calls into the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

inline Mat eye(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat diag(const Vec& d) {
  Mat m = zeros(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m[i][i] = d[i];
  return m;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Vec mul(const Mat& a, const Vec& x) {
  Vec y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < x.size(); ++k) y[i] += a[i][k] * x[k];
  return y;
}

inline Mat transpose(const Mat& a) {
  Mat t = zeros(a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Mat add(Mat a, const Mat& b, double s = 1.0) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) a[i][j] += s * b[i][j];
  return a;
}

// a (x) b with blocks a_ij * b.
inline Mat kron(const Mat& a, const Mat& b) {
  const std::size_t ar = a.size(), ac = a[0].size(), br = b.size(), bc = b[0].size();
  Mat k = zeros(ar * br, ac * bc);
  for (std::size_t i = 0; i < ar; ++i)
    for (std::size_t j = 0; j < ac; ++j)
      for (std::size_t p = 0; p < br; ++p)
        for (std::size_t q = 0; q < bc; ++q) k[i * br + p][j * bc + q] = a[i][j] * b[p][q];
  return k;
}

// Column-major flattening.
inline Vec vec(const Mat& g) {
  Vec v;
  for (std::size_t j = 0; j < g[0].size(); ++j)
    for (std::size_t i = 0; i < g.size(); ++i) v.push_back(g[i][j]);
  return v;
}

// Gauss-Jordan with partial pivoting.
inline Mat inverse(Mat a) {
  const std::size_t n = a.size();
  Mat inv = eye(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw std::runtime_error("oracle::inverse: singular");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double frob(const Mat& a) {
  double s = 0.0;
  for (const Vec& r : a)
    for (double x : r) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

// Sample criterion mean(dg^T Q^T Q dg + dtheta^T Q^{-1} Q^{-T} dtheta) for a
// dense factor Q.
inline double criterion(const Mat& q, const std::vector<Vec>& dthetas, const std::vector<Vec>& dgs) {
  const Mat qinv_t = transpose(inverse(q));
  double total = 0.0;
  for (std::size_t k = 0; k < dthetas.size(); ++k) {
    const Vec a = mul(q, dgs[k]);
    const Vec b = mul(qinv_t, dthetas[k]);
    total += dot(a, a) + dot(b, b);
  }
  return total / static_cast<double>(dthetas.size());
}

// Eigenvalues of a symmetric 2 x 2 matrix, ascending.
inline Vec eig2(const Mat& s) {
  const double m = 0.5 * (s[0][0] + s[1][1]);
  const double d = std::sqrt(0.25 * (s[0][0] - s[1][1]) * (s[0][0] - s[1][1]) + s[0][1] * s[0][1]);
  return {m - d, m + d};
}

// Rotation by angle t in the (i, j) plane of an n x n identity.
inline Mat givens(std::size_t n, std::size_t i, std::size_t j, double t) {
  Mat g = eye(n);
  g[i][i] = std::cos(t);
  g[j][j] = std::cos(t);
  g[i][j] = -std::sin(t);
  g[j][i] = std::sin(t);
  return g;
}

// Hessian of 100 (y - x^2)^2 + (1 - x)^2 by hand.
inline Mat rosenbrock_hessian(double x, double y) {
  return {{1200.0 * x * x - 400.0 * y + 2.0, -400.0 * x}, {-400.0 * x, 200.0}};
}

inline Vec rosenbrock_grad(double x, double y) {
  return {-400.0 * x * (y - x * x) - 2.0 * (1.0 - x), 200.0 * (y - x * x)};
}

}  // namespace oracle
