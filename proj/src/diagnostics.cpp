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

#include "psgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "psgd/errors.hpp"

namespace psgd {

Suite parse_suite(const std::string& text) {
  if (text == "gradcheck") return Suite::kGradcheck;
  if (text == "fixedpoint") return Suite::kFixedpoint;
  if (text == "groups") return Suite::kGroups;
  if (text == "inverses") return Suite::kInverses;
  throw ContractViolation("suite must be gradcheck, fixedpoint, groups or inverses, got '" + text + "'");
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::kGradcheck: return "gradcheck";
    case Suite::kFixedpoint: return "fixedpoint";
    case Suite::kGroups: return "groups";
    case Suite::kInverses: return "inverses";
  }
  return "?";
}

Matrix dense_q(const BlockPrecond& p) {
  return std::visit(
      [](const auto& x) -> Matrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DensePrecond>) return x.q().matrix();
        else if constexpr (std::is_same_v<T, DiagPrecond>) return Matrix::diagonal(x.q());
        else if constexpr (std::is_same_v<T, SpluPrecond>) return matmul(x.dense_l(), x.dense_u());
        else if constexpr (std::is_same_v<T, KronPrecond>) return kron(x.q2().matrix(), x.q1().matrix());
        else return kron(x.dense_q2(), x.dense_q1());
      },
      p);
}

Matrix dense_p(const BlockPrecond& p) {
  const Matrix q = dense_q(p);
  return matmul_tn(q, q);
}

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

bool positive(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return positive(x); });
}

bool positive_diagonal(const TriangularMatrix& t) {
  for (std::size_t i = 0; i < t.dim(); ++i)
    if (!positive(t(i, i))) return false;
  return t.matrix().all_finite();
}

// Random matrix supported on `pattern`.
Matrix random_on(std::size_t rows, std::size_t cols, const std::function<bool(std::size_t, std::size_t)>& pattern,
                 Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (pattern(i, j)) m(i, j) = normal(rng);
  return m;
}

bool upper(std::size_t i, std::size_t j) { return j >= i; }

Matrix identity_plus(const Matrix& e, double h) {
  Matrix m = Matrix::identity(e.rows());
  m += h * e;
  return m;
}

double frob_dot(const Matrix& a, const Matrix& b) {
  return dot(a.data(), b.data());
}

// Splits dense L and U back into SPLU blocks.
SpluPrecond splu_from_dense(const Matrix& l, const Matrix& u, std::size_t r) {
  const std::size_t n = l.rows(), m = n - r;
  SpluPrecond::Factors f;
  Matrix l1(r, r), u1(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      if (j <= i) l1(i, j) = l(i, j);
      if (j >= i) u1(i, j) = u(i, j);
    }
  f.l1 = TriangularMatrix(std::move(l1), Triangle::kLower);
  f.u1 = TriangularMatrix(std::move(u1), Triangle::kUpper);
  f.l2 = Matrix(m, r);
  f.u2 = Matrix(r, m);
  f.l3.resize(m);
  f.u3.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      f.l2(i, j) = l(r + i, j);
      f.u2(j, i) = u(j, r + i);
    }
    f.l3[i] = l(r + i, r + i);
    f.u3[i] = u(r + i, r + i);
  }
  return SpluPrecond(std::move(f));
}

ScanPrecond scan_from_dense(Vector q1, const Matrix& q2) {
  const std::size_t n = q2.rows(), last = n - 1;
  Vector d2(n), c2(last);
  for (std::size_t j = 0; j < n; ++j) d2[j] = q2(j, j);
  for (std::size_t j = 0; j < last; ++j) c2[j] = q2(j, last);
  return ScanPrecond(std::move(q1), std::move(d2), std::move(c2));
}

// Perturbs every factor of p along random group directions; returns
// (perturbed(+h), perturbed(-h), analytic directional derivative).
struct Probe {
  BlockPrecond plus;
  BlockPrecond minus;
  double analytic = 0.0;
};

template <class Grad, class T>
Grad mean_gradient(const T& p, std::span<const TangentPair> pairs, std::function<void(Grad&, const Grad&)> add,
                   std::function<void(Grad&, double)> scale) {
  Grad g = p.relative_gradient(pairs[0]);
  for (std::size_t k = 1; k < pairs.size(); ++k) add(g, p.relative_gradient(pairs[k]));
  scale(g, 1.0 / static_cast<double>(pairs.size()));
  return g;
}

void add_vec(Vector& a, const Vector& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}
void scale_vec(Vector& a, double s) {
  for (double& x : a) x *= s;
}

Probe perturb(const DensePrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  const std::size_t n = p.dim();
  const Matrix e = random_on(n, n, upper, rng);
  const Matrix g = mean_gradient<Matrix>(
      p, pairs, [](Matrix& a, const Matrix& b) { a += b; }, [](Matrix& a, double s) { a *= s; });
  auto at = [&](double s) {
    return DensePrecond(TriangularMatrix(matmul(identity_plus(e, s), p.q().matrix()), Triangle::kUpper));
  };
  return {at(h), at(-h), 2.0 * frob_dot(e, g)};
}

Probe perturb(const DiagPrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  const Vector e = gaussian_vector(p.dim(), 1.0, rng);
  const Vector g = mean_gradient<Vector>(p, pairs, add_vec, scale_vec);
  auto at = [&](double s) {
    Vector q = p.q();
    for (std::size_t i = 0; i < q.size(); ++i) q[i] *= 1.0 + s * e[i];
    return DiagPrecond(std::move(q));
  };
  return {at(h), at(-h), 2.0 * dot(e, g)};
}

Probe perturb(const KronPrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  const Matrix e1 = random_on(p.rows(), p.rows(), upper, rng);
  const Matrix e2 = random_on(p.cols(), p.cols(), upper, rng);
  const auto g = mean_gradient<KronPrecond::Gradient>(
      p, pairs,
      [](KronPrecond::Gradient& a, const KronPrecond::Gradient& b) {
        a.g1 += b.g1;
        a.g2 += b.g2;
      },
      [](KronPrecond::Gradient& a, double s) {
        a.g1 *= s;
        a.g2 *= s;
      });
  auto at = [&](double s) {
    return KronPrecond(TriangularMatrix(matmul(identity_plus(e1, s), p.q1().matrix()), Triangle::kUpper),
                       TriangularMatrix(matmul(identity_plus(e2, s), p.q2().matrix()), Triangle::kUpper));
  };
  return {at(h), at(-h), 2.0 * (frob_dot(e1, g.g1) + frob_dot(e2, g.g2))};
}

Probe perturb(const ScanPrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  const std::size_t n = p.cols(), last = n - 1;
  const Vector e1 = gaussian_vector(p.rows(), 1.0, rng);
  const Matrix e2 = random_on(n, n, [last](std::size_t i, std::size_t j) { return i == j || j == last; }, rng);
  const auto g = mean_gradient<ScanPrecond::Gradient>(
      p, pairs,
      [](ScanPrecond::Gradient& a, const ScanPrecond::Gradient& b) {
        add_vec(a.g1, b.g1);
        add_vec(a.g2_diag, b.g2_diag);
        add_vec(a.g2_last, b.g2_last);
      },
      [](ScanPrecond::Gradient& a, double s) {
        scale_vec(a.g1, s);
        scale_vec(a.g2_diag, s);
        scale_vec(a.g2_last, s);
      });
  double analytic = dot(e1, g.g1);
  for (std::size_t j = 0; j < n; ++j) analytic += e2(j, j) * g.g2_diag[j];
  for (std::size_t j = 0; j < last; ++j) analytic += e2(j, last) * g.g2_last[j];
  auto at = [&](double s) {
    Vector q1 = p.q1();
    for (std::size_t i = 0; i < q1.size(); ++i) q1[i] *= 1.0 + s * e1[i];
    return scan_from_dense(std::move(q1), matmul(identity_plus(e2, s), p.dense_q2()));
  };
  return {at(h), at(-h), 2.0 * analytic};
}

Probe perturb(const SpluPrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  const std::size_t n = p.dim(), r = p.order();
  const Matrix el = random_on(n, n, [r](std::size_t i, std::size_t j) { return j <= i && (j < r || i == j); }, rng);
  const Matrix eu = random_on(n, n, [r](std::size_t i, std::size_t j) { return j >= i && (i < r || i == j); }, rng);
  const auto g = mean_gradient<SpluPrecond::Gradient>(
      p, pairs,
      [](SpluPrecond::Gradient& a, const SpluPrecond::Gradient& b) {
        a.e1 += b.e1;
        a.e2 += b.e2;
        add_vec(a.e3, b.e3);
        a.f1 += b.f1;
        a.f2 += b.f2;
        add_vec(a.f3, b.f3);
      },
      [](SpluPrecond::Gradient& a, double s) {
        a.e1 *= s;
        a.e2 *= s;
        scale_vec(a.e3, s);
        a.f1 *= s;
        a.f2 *= s;
        scale_vec(a.f3, s);
      });
  // Dense versions of the projected gradients.
  const std::size_t m = n - r;
  Matrix gl(n, n), gu(n, n);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      if (j <= i) gl(i, j) = g.e1(i, j);
      if (j >= i) gu(i, j) = g.f1(i, j);
    }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      gl(r + i, j) = g.e2(i, j);
      gu(j, r + i) = g.f2(j, i);
    }
    gl(r + i, r + i) = g.e3[i];
    gu(r + i, r + i) = g.f3[i];
  }
  auto at = [&](double s) {
    return splu_from_dense(matmul(identity_plus(el, s), p.dense_l()), matmul(p.dense_u(), identity_plus(eu, s)), r);
  };
  return {at(h), at(-h), 2.0 * (frob_dot(el, gl) + frob_dot(eu, gu))};
}

}  // namespace

bool on_group(const BlockPrecond& p) {
  return std::visit(
      [](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DensePrecond>) return positive_diagonal(x.q());
        else if constexpr (std::is_same_v<T, DiagPrecond>) return positive(x.q());
        else if constexpr (std::is_same_v<T, SpluPrecond>) {
          const auto& f = x.factors();
          return positive_diagonal(f.l1) && positive_diagonal(f.u1) && positive(f.l3) && positive(f.u3) &&
                 f.l2.all_finite() && f.u2.all_finite();
        } else if constexpr (std::is_same_v<T, KronPrecond>) {
          return positive_diagonal(x.q1()) && positive_diagonal(x.q2());
        } else {
          return positive(x.q1()) && positive(x.d2()) && all_finite(x.c2());
        }
      },
      p);
}

double criterion_gradient_error(const BlockPrecond& p, std::span<const TangentPair> pairs, Rng& rng, double h) {
  detail::require(!pairs.empty(), "criterion_gradient_error: no pairs");
  const Probe probe = std::visit([&](const auto& x) { return perturb(x, pairs, rng, h); }, p);
  const double fd = (criterion(probe.plus, pairs) - criterion(probe.minus, pairs)) / (2.0 * h);
  return std::abs(fd - probe.analytic) / std::max({std::abs(fd), std::abs(probe.analytic), 1e-12});
}

double hvp_linearity_error(const BoundEvaluator& eval, std::span<const double> theta, Rng& rng) {
  const std::size_t n = theta.size();
  const Vector v1 = gaussian_vector(n, 1.0, rng), v2 = gaussian_vector(n, 1.0, rng);
  std::normal_distribution<double> normal;
  const double a = normal(rng), b = normal(rng);
  Vector mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = a * v1[i] + b * v2[i];
  const Vector hm = eval.hvp(theta, mix), h1 = eval.hvp(theta, v1), h2 = eval.hvp(theta, v2);
  Vector diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = hm[i] - a * h1[i] - b * h2[i];
  const double scale = std::abs(a) * norm2(h1) + std::abs(b) * norm2(h2);
  return norm2(diff) / std::max(scale, 1e-300);
}

double hvp_symmetry_error(const BoundEvaluator& eval, std::span<const double> theta, Rng& rng) {
  const std::size_t n = theta.size();
  const Vector v1 = gaussian_vector(n, 1.0, rng), v2 = gaussian_vector(n, 1.0, rng);
  const Vector h1 = eval.hvp(theta, v1), h2 = eval.hvp(theta, v2);
  const double scale = norm2(v2) * norm2(h1) + norm2(v1) * norm2(h2);
  return std::abs(dot(v2, h1) - dot(v1, h2)) / std::max(scale, 1e-300);
}

std::vector<TangentPair> quadratic_pairs(const Matrix& h, std::size_t count, double noise, Rng& rng) {
  std::vector<TangentPair> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    TangentPair pair;
    pair.delta_theta = gaussian_vector(h.rows(), 1.0, rng);
    pair.delta_g = matvec(h, pair.delta_theta);
    if (noise > 0.0) {
      const Vector n = gaussian_vector(h.rows(), noise, rng);
      for (std::size_t i = 0; i < n.size(); ++i) pair.delta_g[i] += n[i];
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ------------------------------------------------------------------ suites

namespace {

CheckResult check(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value <= tolerance};
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a = random_on(n, n, [](std::size_t, std::size_t) { return true; }, rng);
  Matrix s = a + a.transpose();
  s *= 0.5;
  return s;
}

// A generic, non-identity state of each variant.
BlockPrecond random_state(PrecondKind kind, std::size_t m, std::size_t n, std::size_t r, Rng& rng) {
  std::uniform_real_distribution<double> diag(0.5, 1.5);
  auto tri = [&](std::size_t k, Triangle o, std::function<bool(std::size_t, std::size_t)> extra) {
    Matrix t = random_on(
        k, k, [&](std::size_t i, std::size_t j) { return (o == Triangle::kUpper ? j > i : j < i) && extra(i, j); },
        rng, 0.3);
    for (std::size_t i = 0; i < k; ++i) t(i, i) = diag(rng);
    return t;
  };
  auto all = [](std::size_t, std::size_t) { return true; };
  auto positive_vec = [&](std::size_t k) {
    Vector v(k);
    for (double& x : v) x = diag(rng);
    return v;
  };
  switch (kind) {
    case PrecondKind::kDense: return DensePrecond(TriangularMatrix(tri(m * n, Triangle::kUpper, all), Triangle::kUpper));
    case PrecondKind::kDiag: return DiagPrecond(positive_vec(m * n));
    case PrecondKind::kKron:
      return KronPrecond(TriangularMatrix(tri(m, Triangle::kUpper, all), Triangle::kUpper),
                         TriangularMatrix(tri(n, Triangle::kUpper, all), Triangle::kUpper));
    case PrecondKind::kScan: return ScanPrecond(positive_vec(m), positive_vec(n), gaussian_vector(n - 1, 0.3, rng));
    case PrecondKind::kSplu: {
      const std::size_t len = m * n;
      const Matrix l = tri(len, Triangle::kLower, [r](std::size_t, std::size_t j) { return j < r; });
      const Matrix u = tri(len, Triangle::kUpper, [r](std::size_t i, std::size_t) { return i < r; });
      return splu_from_dense(l, u, r);
    }
  }
  throw ContractViolation("random_state: bad kind");
}

constexpr PrecondKind kAllKinds[] = {PrecondKind::kDense, PrecondKind::kDiag, PrecondKind::kSplu, PrecondKind::kKron,
                                     PrecondKind::kScan};

std::vector<CheckResult> gradcheck_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(seed, 11);

  struct Named {
    std::string name;
    std::unique_ptr<Problem> problem;
  };
  std::vector<Named> problems;
  {
    Matrix h = random_symmetric(4, rng);
    problems.push_back({"quad", make_quadratic(h, gaussian_vector(4, 1.0, rng), 0.1)});
  }
  problems.push_back({"rosenbrock", make_rosenbrock()});
  problems.push_back({"xor", make_xor_mlp(4)});
  problems.push_back({"addition", make_addition_rnn(5, 3, 2)});

  for (const Named& np : problems) {
    double grad_err = 0.0, lin_err = 0.0, sym_err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto batch = np.problem->bind_batch(static_cast<std::uint64_t>(k));
      const Vector theta = gaussian_vector(np.problem->dim(), 1.0, rng);
      grad_err = std::max(grad_err, gradient_check(*batch, theta));
      if (batch->has_hvp()) {
        lin_err = std::max(lin_err, hvp_linearity_error(*batch, theta, rng));
        sym_err = std::max(sym_err, hvp_symmetry_error(*batch, theta, rng));
      }
    }
    out.push_back(check(np.name + " gradient vs central differences", grad_err, 1e-5));
    if (np.problem->has_exact_hvp()) {
      out.push_back(check(np.name + " hvp linearity", lin_err, 1e-10));
      out.push_back(check(np.name + " hvp symmetry", sym_err, 1e-10));
    }
  }

  {
    const auto& quad = problems[0].problem;
    const auto clean = make_quadratic(quad->ground_truth()->h, quad->ground_truth()->b, 0.0);
    const auto batch = clean->bind_batch(0);
    double err = 0.0;
    const ProbeConfig cfg = ProbeConfig::for_mode(ProbeMode::kApproximate);
    for (int k = 0; k < 20; ++k) {
      const Vector theta = gaussian_vector(4, 1.0, rng);
      const Vector dt = sample_delta_theta(4, cfg, rng);
      const Vector a = approx_delta_g(*batch, theta, dt);
      const Vector e = exact_delta_g(*batch, theta, dt);
      Vector d(4);
      for (std::size_t i = 0; i < 4; ++i) d[i] = a[i] - e[i];
      err = std::max(err, norm2(d) / norm2(e));
    }
    out.push_back(check("quad approximate vs exact Hvp", err, 1e-9));
  }

  for (PrecondKind kind : kAllKinds) {
    const std::size_t m = 3, n = 4;
    const BlockPrecond p = random_state(kind, m, n, 3, rng);
    const Matrix h = random_symmetric(m * n, rng);
    const auto pairs = quadratic_pairs(h, 8, 0.1, rng);
    double err = 0.0;
    for (int k = 0; k < 20; ++k) err = std::max(err, criterion_gradient_error(p, pairs, rng));
    out.push_back(check(to_string(kind) + " relative gradient vs criterion differences", err, 1e-5));
  }
  return out;
}

// max | |eig(P H)| - 1 | via the symmetric similar matrix Q H Q^T.
double eig_deviation(const BlockPrecond& p, const Matrix& h) {
  const Matrix q = dense_q(p);
  Matrix s = matmul_nt(matmul(q, h), q);
  s = 0.5 * (s + s.transpose());
  double dev = 0.0;
  for (double lambda : sym_eig(s).eigenvalues) dev = std::max(dev, std::abs(std::abs(lambda) - 1.0));
  return dev;
}

std::vector<CheckResult> fixedpoint_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(seed, 12);

  {
    const Vector d{1, -2, 3, -4, 5};
    const Matrix h = Matrix::diagonal(d);
    BlockPrecond p = DensePrecond(d.size());
    for (int k = 0; k < 20000; ++k) update(p, quadratic_pairs(h, 1, 0.0, rng)[0], 0.01);
    out.push_back(check("dense |eig(PH)| - 1, noiseless indefinite H", eig_deviation(p, h), 0.1));
  }
  {
    const Matrix h = kron(Matrix{{2, 1}, {1, -3}}, Matrix{{1, 0.5, 0}, {0.5, 2, 0}, {0, 0, -1}});
    BlockPrecond p = KronPrecond(3, 2);
    for (int k = 0; k < 20000; ++k) update(p, quadratic_pairs(h, 1, 0.0, rng)[0], 0.01);
    out.push_back(check("kron |eig(PH)| - 1, Kronecker-structured H", eig_deviation(p, h), 0.15));
  }
  {
    const Vector d{2, -5, 0.5};
    BlockPrecond p = DiagPrecond(d.size());
    for (int k = 0; k < 50000; ++k) update(p, quadratic_pairs(Matrix::diagonal(d), 1, 0.0, rng)[0], 0.01);
    const Vector m2g{d[0] * d[0], d[1] * d[1], d[2] * d[2]};
    const Vector closed = closed_form_diagonal(Vector(3, 1.0), m2g);
    const Vector q = std::get<DiagPrecond>(p).q();
    double err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) err = std::max(err, std::abs(q[i] * q[i] - closed[i]) / closed[i]);
    out.push_back(check("diag P vs closed-form equilibration", err, 0.05));
  }
  {
    // Fixed point P E[dg dg^T] P = E[dtheta dtheta^T] under gradient noise.
    const Matrix h = Matrix{{3, 1, 0}, {1, -2, 0.5}, {0, 0.5, 1}};
    BlockPrecond p = DensePrecond(3);
    for (int k = 0; k < 20000; ++k) update(p, quadratic_pairs(h, 1, 0.3, rng)[0], 0.01);
    for (int k = 0; k < 20000; ++k) update(p, quadratic_pairs(h, 1, 0.3, rng)[0], 0.001);
    const auto pairs = quadratic_pairs(h, 100000, 0.3, rng);
    Matrix gg(3, 3), tt(3, 3);
    for (const TangentPair& pr : pairs)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          gg(i, j) += pr.delta_g[i] * pr.delta_g[j];
          tt(i, j) += pr.delta_theta[i] * pr.delta_theta[j];
        }
    gg *= 1.0 / pairs.size();
    tt *= 1.0 / pairs.size();
    const Matrix pm = dense_p(p);
    const Matrix resid = matmul(matmul(pm, gg), pm) - tt;
    out.push_back(check("dense fixed-point residual / ||E[dtheta dtheta^T]||", resid.frobenius_norm() / tt.frobenius_norm(), 0.1));
  }
  return out;
}

// Counts entries of m outside the pattern.
double off_pattern(const Matrix& m, const std::function<bool(std::size_t, std::size_t)>& pattern) {
  double count = 0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!pattern(i, j) && m(i, j) != 0.0) ++count;
  return count;
}

std::vector<CheckResult> groups_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(seed, 13);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  for (PrecondKind kind : kAllKinds) {
    BlockPrecond p = random_state(kind, 3, 4, 3, rng);
    const std::size_t n = dim(p);
    double violations = 0;
    for (int k = 0; k < 10000; ++k) {
      TangentPair pair;
      pair.delta_theta = gaussian_vector(n, std::pow(10.0, log_scale(rng)), rng);
      pair.delta_g = gaussian_vector(n, std::pow(10.0, log_scale(rng)), rng);
      update(p, pair, 0.5);
      if (!on_group(p)) ++violations;
    }
    out.push_back(check(to_string(kind) + " diagonal-positivity violations in 1e4 updates at mu0 = 0.5", violations, 0));
  }
  {
    const std::size_t n = 5, last = n - 1;
    auto scan = [last](std::size_t i, std::size_t j) { return i == j || j == last; };
    const Matrix a = random_on(n, n, scan, rng), b = random_on(n, n, scan, rng);
    out.push_back(check("SCAN Q2 pattern closed under products", off_pattern(matmul(a, b), scan), 0));
  }
  {
    const std::size_t n = 7, r = 2;
    auto lp = [r](std::size_t i, std::size_t j) { return j <= i && (j < r || i == j); };
    auto up = [r](std::size_t i, std::size_t j) { return j >= i && (i < r || i == j); };
    const Matrix l1 = random_on(n, n, lp, rng), l2 = random_on(n, n, lp, rng);
    const Matrix u1 = random_on(n, n, up, rng), u2 = random_on(n, n, up, rng);
    out.push_back(check("SPLU L pattern closed under products", off_pattern(matmul(l1, l2), lp), 0));
    out.push_back(check("SPLU U pattern closed under products", off_pattern(matmul(u1, u2), up), 0));
  }
  return out;
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / std::max(norm2(b), 1e-300);
}

std::vector<CheckResult> inverses_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(seed, 14);
  using A = SpluPrecond::Action;
  {
    const BlockPrecond state = random_state(PrecondKind::kSplu, 12, 1, 3, rng);
    const SpluPrecond& p = std::get<SpluPrecond>(state);
    const Matrix l = p.dense_l(), u = p.dense_u(), q = matmul(l, u);
    double round_trip = 0.0, dense = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vector v = gaussian_vector(12, 1.0, rng);
      round_trip = std::max(round_trip, rel_diff(splu_matvec(p, splu_matvec(p, v, A::kQinv), A::kQ), v));
      round_trip = std::max(round_trip, rel_diff(splu_matvec(p, splu_matvec(p, v, A::kQ), A::kQinv), v));
      round_trip = std::max(round_trip, rel_diff(splu_matvec(p, splu_matvec(p, v, A::kQinvT), A::kQt), v));
      round_trip = std::max(round_trip, rel_diff(splu_matvec(p, splu_matvec(p, v, A::kQt), A::kQinvT), v));
      dense = std::max(dense, rel_diff(splu_matvec(p, v, A::kQ), matvec(q, v)));
      dense = std::max(dense, rel_diff(splu_matvec(p, v, A::kQt), matvec_t(q, v)));
      dense = std::max(dense, rel_diff(matvec(q, splu_matvec(p, v, A::kQinv)), v));
      dense = std::max(dense, rel_diff(matvec_t(q, splu_matvec(p, v, A::kQinvT)), v));
    }
    out.push_back(check("SPLU Q Q^{-1} round trip (L = 12, r = 3)", round_trip, 1e-10));
    out.push_back(check("SPLU agreement with dense L U (L = 12, r = 3)", dense, 1e-10));
  }
  for (PrecondKind kind : kAllKinds) {
    const BlockPrecond p = random_state(kind, 3, 4, 3, rng);
    const Matrix q = dense_q(p);
    double err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vector v = gaussian_vector(dim(p), 1.0, rng);
      err = std::max(err, rel_diff(matvec_t(q, q_inv_t_times(p, v)), v));
      err = std::max(err, rel_diff(q_times(p, v), matvec(q, v)));
    }
    out.push_back(check(to_string(kind) + " Q^{-T} and Q against the dense factor", err, 1e-10));
  }
  {
    double err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const std::size_t n = 16;
      Matrix t = random_on(n, n, upper, rng, 0.3);
      for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0 + std::abs(t(i, i));
      const TriangularMatrix tri(t, Triangle::kUpper);
      const Vector b = gaussian_vector(n, 1.0, rng);
      err = std::max(err, rel_diff(matvec(t, tri_solve(tri, b, false)), b));
      err = std::max(err, rel_diff(matvec_t(t, tri_solve(tri, b, true)), b));
    }
    out.push_back(check("triangular solve residual", err, 1e-10));
  }
  return out;
}

}  // namespace

std::vector<CheckResult> run_suite(Suite suite, std::uint64_t seed) {
  switch (suite) {
    case Suite::kGradcheck: return gradcheck_suite(seed);
    case Suite::kFixedpoint: return fixedpoint_suite(seed);
    case Suite::kGroups: return groups_suite(seed);
    case Suite::kInverses: return inverses_suite(seed);
  }
  return {};
}

}  // namespace psgd
