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
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "psgd/curvature.hpp"
#include "psgd/layout.hpp"
#include "psgd/linalg.hpp"

namespace psgd {

// Preconditioners keep a factor Q with P = Q^T Q and learn it from probe pairs
// by minimizing
//
//   c(P) = E[dg^T P dg + dtheta^T P^{-1} dtheta]
//
// with relative gradient steps Q <- Q - mu * grad * Q on a matrix Lie group
// (triangular, diagonal or a sparse subgroup). The step is normalized,
// mu = mu0 / max|grad| with 0 < mu0 < 1, so every diagonal entry is scaled
// by a factor in (1 - mu0, 1 + mu0) and the factor stays on the group. The
// expectation is replaced by the single pair passed to update(). Constant
// factors of 2 in the gradients are dropped.

// Updates whose result has a triangular diagonal entry below this are rejected.
inline constexpr double kDegenerateDiagonal = 1e-150;

/// Dense preconditioner: Q upper triangular (the Cholesky factor of P).
class DensePrecond {
 public:
  explicit DensePrecond(std::size_t dim);
  explicit DensePrecond(TriangularMatrix q);

  std::size_t dim() const { return q_.dim(); }
  const TriangularMatrix& q() const { return q_; }

  Vector q_times(std::span<const double> v) const;      // Q v
  Vector q_inv_t_times(std::span<const double> v) const;  // Q^{-T} v
  Vector apply(std::span<const double> g) const;          // Q^T Q g

  // triu(a a^T - b b^T) with a = Q dg, b = Q^{-T} dtheta.
  Matrix relative_gradient(const TangentPair& pair) const;
  bool update(const TangentPair& pair, double step);

  std::size_t param_count() const { return dim() * (dim() + 1) / 2; }

 private:
  TriangularMatrix q_;
};

/// Diagonal preconditioner, P = diag(q)^2.
class DiagPrecond {
 public:
  explicit DiagPrecond(std::size_t dim);
  explicit DiagPrecond(Vector q);

  std::size_t dim() const { return q_.size(); }
  const Vector& q() const { return q_; }

  Vector q_times(std::span<const double> v) const;
  Vector q_inv_t_times(std::span<const double> v) const;
  Vector apply(std::span<const double> g) const;

  // (q dg)^2 - (dtheta / q)^2, elementwise.
  Vector relative_gradient(const TangentPair& pair) const;
  bool update(const TangentPair& pair, double step);

  std::size_t param_count() const { return dim(); }

 private:
  Vector q_;
};

/// Sparse LU preconditioner, Q = L U. L is lower triangular with nonzeros
/// only in its first r columns and on the diagonal; U is upper triangular
/// with nonzeros only in its first r rows and on the diagonal:
///
///   L = [L1  0       ]    U = [U1  U2      ]
///       [L2  diag(l3)]        [0   diag(u3)]
class SpluPrecond {
 public:
  enum class Action { kQ, kQt, kQinv, kQinvT };

  struct Factors {
    TriangularMatrix l1;  // r x r lower
    Matrix l2;            // (n - r) x r
    Vector l3;            // n - r, positive
    TriangularMatrix u1;  // r x r upper
    Matrix u2;            // r x (n - r)
    Vector u3;            // n - r, positive
  };

  // Relative gradients projected onto the sparsity patterns of L and U.
  struct Gradient {
    Matrix e1;  // lower part of the L gradient's leading block
    Matrix e2;
    Vector e3;
    Matrix f1;  // upper part of the U gradient's leading block
    Matrix f2;
    Vector f3;
  };

  // r is clamped to n.
  SpluPrecond(std::size_t dim, std::size_t order);
  explicit SpluPrecond(Factors factors);

  std::size_t dim() const { return n_; }
  std::size_t order() const { return r_; }
  const Factors& factors() const { return f_; }

  // O(r n) after the r x r triangular work.
  Vector matvec(std::span<const double> v, Action which) const;
  Vector q_times(std::span<const double> v) const { return matvec(v, Action::kQ); }
  Vector q_inv_t_times(std::span<const double> v) const { return matvec(v, Action::kQinvT); }
  Vector apply(std::span<const double> g) const;

  // dL = E_l L:  grad_L = proj_L(a a^T - b b^T),  a = Q dg, b = Q^{-T} dtheta
  // dU = U E_u:  grad_U = proj_U(P dg dg^T - dtheta (P^{-1} dtheta)^T)
  Gradient relative_gradient(const TangentPair& pair) const;
  bool update(const TangentPair& pair, double step);

  Matrix dense_l() const;
  Matrix dense_u() const;

  // Free parameters for a length-n vector: 2 (r + 1) n - r^2 - 2 r.
  std::size_t param_count() const;

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  Factors f_;
};

/// Kronecker product preconditioner for an M x N matrix parameter,
/// Q = Q2 (x) Q1 with Q1 (M x M) and Q2 (N x N) upper triangular. Acts on
/// the matricized gradient as P1 G P2.
class KronPrecond {
 public:
  struct Gradient {
    Matrix g1;  // M x M, upper
    Matrix g2;  // N x N, upper
  };

  KronPrecond(std::size_t rows, std::size_t cols);
  KronPrecond(TriangularMatrix q1, TriangularMatrix q2);

  std::size_t rows() const { return q1_.dim(); }
  std::size_t cols() const { return q2_.dim(); }
  std::size_t dim() const { return rows() * cols(); }
  const TriangularMatrix& q1() const { return q1_; }
  const TriangularMatrix& q2() const { return q2_; }

  Matrix apply_matrix(const Matrix& g) const;  // P1 G P2
  Vector q_times(std::span<const double> v) const;
  Vector q_inv_t_times(std::span<const double> v) const;
  Vector apply(std::span<const double> g) const;

  // A = Q1 dG Q2^T, B = Q1^{-T} dTheta Q2^{-1};
  // grad1 = triu(A A^T - B B^T), grad2 = triu(A^T A - B^T B).
  Gradient relative_gradient(const TangentPair& pair) const;
  // Each factor takes its own normalized step.
  bool update(const TangentPair& pair, double step);

  std::size_t param_count() const;

 private:
  TriangularMatrix q1_;
  TriangularMatrix q2_;
};

/// Scaling-and-normalization preconditioner: a Kronecker preconditioner with
/// Q1 = diag(q1) on the output side and Q2 = diag(d2) plus a last column c2
/// on the (augmented) input side. Q2 x normalizes features: with
/// d2 = 1/sigma and c2 = -nu/sigma it maps (x, 1) to ((x - nu)/sigma, 1).
class ScanPrecond {
 public:
  struct Gradient {
    Vector g1;       // diagonal of the Q1 gradient
    Vector g2_diag;  // diagonal of the Q2 gradient
    Vector g2_last;  // last column of the Q2 gradient, above the diagonal
  };

  ScanPrecond(std::size_t rows, std::size_t cols);
  ScanPrecond(Vector q1, Vector d2, Vector c2);

  std::size_t rows() const { return q1_.size(); }
  std::size_t cols() const { return d2_.size(); }
  std::size_t dim() const { return rows() * cols(); }
  const Vector& q1() const { return q1_; }
  const Vector& d2() const { return d2_; }
  const Vector& c2() const { return c2_; }

  Matrix dense_q1() const;
  Matrix dense_q2() const;

  Vector q2_times(std::span<const double> x) const;  // Q2 x
  Matrix apply_matrix(const Matrix& g) const;         // P1 G P2
  Vector q_times(std::span<const double> v) const;
  Vector q_inv_t_times(std::span<const double> v) const;
  Vector apply(std::span<const double> g) const;

  Gradient relative_gradient(const TangentPair& pair) const;
  bool update(const TangentPair& pair, double step);

  std::size_t param_count() const { return rows() + 2 * cols() - 1; }

 private:
  Matrix times_q2_t(const Matrix& g) const;    // G Q2^T
  Matrix times_q2(const Matrix& g) const;      // G Q2
  Matrix times_q2_inv(const Matrix& g) const;  // G Q2^{-1}

  Vector q1_;
  Vector d2_;
  Vector c2_;
};

using BlockPrecond = std::variant<DensePrecond, DiagPrecond, SpluPrecond, KronPrecond, ScanPrecond>;

enum class PrecondKind { kDense, kDiag, kSplu, kKron, kScan };

PrecondKind parse_precond_kind(const std::string& text);
std::string to_string(PrecondKind kind);
PrecondKind kind_of(const BlockPrecond& p);

// Dispatch over the variant.
std::size_t dim(const BlockPrecond& p);
Vector apply(const BlockPrecond& p, std::span<const double> g);
bool update(BlockPrecond& p, const TangentPair& pair, double step);
std::size_t param_count(const BlockPrecond& p);
Vector q_times(const BlockPrecond& p, std::span<const double> v);
Vector q_inv_t_times(const BlockPrecond& p, std::span<const double> v);

// Sample criterion: mean over pairs of dg^T P dg + dtheta^T P^{-1} dtheta.
double criterion(const BlockPrecond& p, std::span<const TangentPair> pairs);

// Free parameter counts of each preconditioner for an M x N matrix parameter.
std::size_t table_param_count(PrecondKind kind, std::size_t m, std::size_t n,
                              std::size_t splu_order = 10);

// Optimal diagonal P: sqrt(m2_theta / m2_g) elementwise. With unit-normal
// probes (m2_theta = 1) this is the equilibration preconditioner.
Vector closed_form_diagonal(std::span<const double> m2_theta, std::span<const double> m2_g);

Vector splu_matvec(const SpluPrecond& p, std::span<const double> v, SpluPrecond::Action which);
Vector scan_q2_matvec(const ScanPrecond& p, std::span<const double> x);

struct PrecondBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  BlockPrecond precond;
};

/// Direct sum of per-block preconditioners tiling the parameter vector.
/// Updates run block-parallel.
class DirectSumPrecond {
 public:
  DirectSumPrecond() = default;
  DirectSumPrecond(std::vector<PrecondBlock> blocks, std::size_t total);

  std::size_t dim() const { return total_; }
  const std::vector<PrecondBlock>& blocks() const { return blocks_; }
  std::vector<PrecondBlock>& blocks() { return blocks_; }

  Vector apply(std::span<const double> g) const;
  // Returns the number of blocks whose update was accepted.
  std::size_t update(const TangentPair& pair, double step);

  std::vector<TangentPair> route(const TangentPair& pair) const;
  TangentPair scatter(std::span<const TangentPair> parts) const;

  double criterion(std::span<const TangentPair> pairs) const;
  std::size_t param_count() const;

 private:
  std::vector<PrecondBlock> blocks_;
  std::size_t total_ = 0;
};

std::vector<TangentPair> direct_sum_route(const DirectSumPrecond& p, const TangentPair& pair);

/// Which preconditioner goes where. dense, diag and splu cover the whole
/// parameter vector with one block (splu optionally one block per tensor);
/// kron and scan get one block per tensor. `overrides` maps tensor names to
/// kinds and switches to one block per tensor.
struct PrecondSpec {
  PrecondKind kind = PrecondKind::kDense;
  std::size_t splu_order = 10;
  bool splu_per_tensor = false;
  std::map<std::string, PrecondKind> overrides;

  // "dense", "diag", "splu", "kron", "scan" or "sum:w1=kron,w2=dense".
  static PrecondSpec parse(const std::string& text);
  std::string to_string() const;
};

DirectSumPrecond make_preconditioner(const ParamLayout& layout, const PrecondSpec& spec);

}  // namespace psgd
