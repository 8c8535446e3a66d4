// liegen/lie.hpp

// Copyright 2026 The LieGen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Compact matrix Lie groups and their algebras: the k-torus embedded as
// block-diagonal 2x2 rotations inside SO(2k), the special orthogonal groups
// SO(n), the unitary groups U(n), and finite products of these.
//
// Conventions (load-bearing throughout the library):
//  * The Lie algebra basis is orthonormal under <A, B> = Re tr(A^H B).
//    In particular the so(2) generator is [[0,1],[-1,0]]/sqrt(2), so a torus
//    coefficient x corresponds to the rotation angle x/sqrt(2).
//  * Algebra elements travel as real coefficient vectors in that basis;
//    matrix representations are built on demand.
//  * All group matrices are stored as complex matrices; for real kinds the
//    imaginary parts are exactly zero bit-for-bit.
//  * SO(2) principal logarithm: expm([[0,t],[-t,0]]) = [[cos t, sin t],
//    [-sin t, cos t]], so the angle of a 2x2 rotation block is
//    atan2(g01, g00), with branch (-pi, pi].

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "liegen/errors.hpp"
#include "liegen/rng.hpp"

namespace liegen::lie {

using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kPi = 3.14159265358979323846;

enum class Family { Torus, SpecialOrthogonal, Unitary, Product };

/// Identifies one of the supported compact groups.
///
/// Tag grammar (used in file headers and the CLI `kind` field):
///   "torus:k" | "so:n" | "u:n" | "product:(<tag>,<tag>,...)"
struct GroupKind {
  Family family = Family::Torus;
  int param = 1;                   // k for torus, n for so/u; unused for products
  std::vector<GroupKind> factors;  // product components, in block order

  static GroupKind torus(int k);
  static GroupKind special_orthogonal(int n);
  static GroupKind unitary(int n);
  static GroupKind product(std::vector<GroupKind> parts);

  /// Side length of the defining matrix representation.
  int matrix_dim() const;
  /// Real dimension of the Lie algebra (= length of coefficient vectors).
  int algebra_dim() const;
  /// True if any factor is unitary (matrices have nonzero imaginary parts).
  bool is_complex() const;
  /// True if the group is a torus or a product of tori (abelian case with
  /// closed-form conditional transitions).
  bool is_abelian() const;
  /// Total number of torus angle coordinates (torus blocks across factors).
  int torus_coordinates() const;

  std::string tag() const;
  static GroupKind parse(const std::string& tag);

  bool operator==(const GroupKind& other) const;
  bool operator!=(const GroupKind& other) const { return !(*this == other); }
};

/// A group element: `kind` plus its defining matrix.
struct GroupElement {
  GroupKind kind;
  Matrix mat;

  static GroupElement identity(const GroupKind& kind);
};

/// An algebra element as coefficients in the orthonormal basis.
struct AlgebraVector {
  GroupKind kind;
  Vector coeffs;

  static AlgebraVector zero(const GroupKind& kind);
};

// ---------------------------------------------------------------------------
// Basis and coefficient maps
// ---------------------------------------------------------------------------

/// Materialized orthonormal basis matrices, in coefficient order:
///  * torus:  per block b, [[0,1],[-1,0]]/sqrt(2) embedded at rows/cols 2b..2b+1
///  * so(n):  pairs (i,j), i<j in lexicographic order, (E_ij - E_ji)/sqrt(2)
///  * u(n):   n diagonal generators i E_kk, then (E_ij - E_ji)/sqrt(2) over
///            lexicographic pairs, then i (E_ij + E_ji)/sqrt(2) over the same
///  * products: each factor's basis embedded in its diagonal block, factor order
std::vector<Matrix> algebra_basis(const GroupKind& kind);

/// v -> sum_i v_i e_i.
Matrix coeffs_to_matrix(const GroupKind& kind, const Vector& v);

/// Orthogonal projection v_i = Re tr(e_i^H m).  Throws NotInAlgebraError if
/// the reconstruction residual ||m - sum v_i e_i||_F exceeds `tol`.
Vector matrix_to_coeffs(const GroupKind& kind, const Matrix& m,
                        double tol = 1e-6);

// ---------------------------------------------------------------------------
// Exponential map and logarithms
// ---------------------------------------------------------------------------

/// Matrix exponential of an algebra element.  Torus blocks use the closed-form
/// 2x2 rotation; other kinds use scaling-and-squaring with a fixed order-12
/// Taylor kernel (squaring count chosen from the 1-norm); products recurse
/// blockwise.  Relative accuracy target 1e-12.
Matrix group_exp(const GroupKind& kind, const Matrix& algebra_element);

/// Convenience: group_exp(coeffs_to_matrix(v) * scale), with a fast path for
/// torus blocks that never materializes the algebra matrix.
Matrix exp_from_coeffs(const GroupKind& kind, const Vector& v,
                       double scale = 1.0);

/// Principal angle of a 2x2 rotation block: atan2(g01, g00) in (-pi, pi].
double so2_log(const Eigen::Matrix2d& block);

/// Principal angles of every torus block of `g`, in coordinate order
/// (non-torus factors contribute none); length = kind.torus_coordinates().
Vector torus_angles(const GroupElement& g);

// ---------------------------------------------------------------------------
// Group operations
// ---------------------------------------------------------------------------

GroupElement group_mul(const GroupElement& a, const GroupElement& b);
GroupElement group_inv(const GroupElement& a);

/// Right-multiply g in place by exp(scale * v) without forming intermediates
/// for torus blocks.  The hot path of every integrator step.  The
/// (kind, matrix) overloads serve batched state containers that keep one kind
/// for many matrices.
void right_multiply_exp(const GroupKind& kind, Matrix& g, const Vector& v,
                        double scale);
void right_multiply_exp(GroupElement& g, const Vector& v, double scale);

/// Frobenius defect ||g^H g - I||_F.
double unitarity_defect(const GroupKind& kind, const Matrix& g);
double unitarity_defect(const GroupElement& g);

/// Membership test: unitarity defect <= tol; real kinds additionally require
/// det within max(tol, 1e-6) of +1 and (for torus/product blocks) vanishing
/// off-block entries within tol.
bool is_on_group(const GroupElement& g, double tol = 1e-8);

/// Project back onto the group (round-off drift only): torus blocks use the
/// closed-form nearest rotation, other kinds a Newton polar iteration
/// X <- (X + X^{-H})/2 run to ||X^H X - I||_F <= 1e-14.
void reorthonormalize(const GroupKind& kind, Matrix& g);
void reorthonormalize(GroupElement& g);

// ---------------------------------------------------------------------------
// Haar sampling
// ---------------------------------------------------------------------------

/// Exact Haar sample: uniform angles for torus blocks; QR of a Ginibre matrix
/// with the R-diagonal sign (real) or phase (complex) correction for SO/U,
/// with the SO determinant fixed by flipping the last column when det = -1.
GroupElement haar_sample(const GroupKind& kind, Rng& rng);

// ---------------------------------------------------------------------------
// Flattening for the score network
// ---------------------------------------------------------------------------

/// Length of flatten_element output: matrix_dim^2 for real kinds, twice that
/// for complex kinds (re/im pairs).
int flat_dim(const GroupKind& kind);

/// Row-major flatten; complex entries contribute (re, im) pairs.
void flatten_element(const GroupKind& kind, const Matrix& g,
                     Eigen::Ref<Eigen::RowVectorXd> out);
void flatten_element(const GroupElement& g, Eigen::Ref<Eigen::RowVectorXd> out);

}  // namespace liegen::lie
