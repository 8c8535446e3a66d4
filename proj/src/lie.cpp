// lie.cpp

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

#include "liegen/lie.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liegen::lie {

namespace {

// A leaf factor of a (possibly product) kind, with its diagonal block offset
// and its coefficient-vector offset.
struct Leaf {
  const GroupKind* kind;  // never a product
  int row;                // block start row/col in the big matrix
  int coeff;              // start index in the coefficient vector
};

void collect_leaves(const GroupKind& kind, int& row, int& coeff,
                    std::vector<Leaf>& out) {
  if (kind.family == Family::Product) {
    for (const auto& f : kind.factors) collect_leaves(f, row, coeff, out);
    return;
  }
  out.push_back(Leaf{&kind, row, coeff});
  row += kind.matrix_dim();
  coeff += kind.algebra_dim();
}

std::vector<Leaf> leaves_of(const GroupKind& kind) {
  std::vector<Leaf> out;
  int row = 0, coeff = 0;
  collect_leaves(kind, row, coeff, out);
  return out;
}

// Order-12 Taylor with scaling and squaring for a skew/skew-Hermitian block.
Matrix expm_scaling_squaring(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  const Matrix eye = Matrix::Identity(n, n);
  // 1-norm (max column sum of absolute values).
  double nrm = 0.0;
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += std::abs(m(r, c));
    nrm = std::max(nrm, s);
  }
  int squarings = 0;
  if (nrm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  }
  const Matrix a = m / std::pow(2.0, squarings);
  // Horner evaluation of sum_{j<=12} a^j / j!.
  Matrix t = eye;
  for (int j = 12; j >= 1; --j) {
    t = eye + (a / static_cast<double>(j)) * t;
  }
  for (int s = 0; s < squarings; ++s) t = t * t;
  return t;
}

void torus_block_rotation(double angle, Matrix& out, int r) {
  const double c = std::cos(angle), s = std::sin(angle);
  out(r, r) = c;
  out(r, r + 1) = s;
  out(r + 1, r) = -s;
  out(r + 1, r + 1) = c;
}

}  // namespace

// ---------------------------------------------------------------------------
// GroupKind
// ---------------------------------------------------------------------------

GroupKind GroupKind::torus(int k) {
  if (k < 1) throw ConfigError("torus power must be >= 1");
  return GroupKind{Family::Torus, k, {}};
}

GroupKind GroupKind::special_orthogonal(int n) {
  if (n < 2) throw ConfigError("SO(n) requires n >= 2");
  return GroupKind{Family::SpecialOrthogonal, n, {}};
}

GroupKind GroupKind::unitary(int n) {
  if (n < 1) throw ConfigError("U(n) requires n >= 1");
  return GroupKind{Family::Unitary, n, {}};
}

GroupKind GroupKind::product(std::vector<GroupKind> parts) {
  if (parts.empty()) throw ConfigError("product kind needs at least one factor");
  GroupKind k;
  k.family = Family::Product;
  k.param = 0;
  k.factors = std::move(parts);
  return k;
}

int GroupKind::matrix_dim() const {
  switch (family) {
    case Family::Torus: return 2 * param;
    case Family::SpecialOrthogonal: return param;
    case Family::Unitary: return param;
    case Family::Product: {
      int d = 0;
      for (const auto& f : factors) d += f.matrix_dim();
      return d;
    }
  }
  return 0;
}

int GroupKind::algebra_dim() const {
  switch (family) {
    case Family::Torus: return param;
    case Family::SpecialOrthogonal: return param * (param - 1) / 2;
    case Family::Unitary: return param * param;
    case Family::Product: {
      int d = 0;
      for (const auto& f : factors) d += f.algebra_dim();
      return d;
    }
  }
  return 0;
}

bool GroupKind::is_complex() const {
  if (family == Family::Unitary) return true;
  if (family == Family::Product) {
    for (const auto& f : factors)
      if (f.is_complex()) return true;
  }
  return false;
}

bool GroupKind::is_abelian() const {
  if (family == Family::Torus) return true;
  if (family == Family::Product) {
    for (const auto& f : factors)
      if (!f.is_abelian()) return false;
    return true;
  }
  return false;
}

int GroupKind::torus_coordinates() const {
  if (family == Family::Torus) return param;
  if (family == Family::Product) {
    int k = 0;
    for (const auto& f : factors) k += f.torus_coordinates();
    return k;
  }
  return 0;
}

std::string GroupKind::tag() const {
  switch (family) {
    case Family::Torus: return "torus:" + std::to_string(param);
    case Family::SpecialOrthogonal: return "so:" + std::to_string(param);
    case Family::Unitary: return "u:" + std::to_string(param);
    case Family::Product: {
      std::string s = "product:(";
      for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) s += ",";
        s += factors[i].tag();
      }
      return s + ")";
    }
  }
  return "";
}

namespace {

GroupKind parse_impl(const std::string& s, std::size_t& pos);

std::vector<GroupKind> parse_list(const std::string& s, std::size_t& pos) {
  std::vector<GroupKind> parts;
  if (pos >= s.size() || s[pos] != '(')
    throw ConfigError("bad kind tag: expected '(' in \"" + s + "\"");
  ++pos;
  while (true) {
    parts.push_back(parse_impl(s, pos));
    if (pos < s.size() && s[pos] == ',') {
      ++pos;
      continue;
    }
    break;
  }
  if (pos >= s.size() || s[pos] != ')')
    throw ConfigError("bad kind tag: expected ')' in \"" + s + "\"");
  ++pos;
  return parts;
}

GroupKind parse_impl(const std::string& s, std::size_t& pos) {
  const auto starts = [&](const char* p) {
    return s.compare(pos, std::string(p).size(), p) == 0;
  };
  if (starts("product:")) {
    pos += 8;
    return GroupKind::product(parse_list(s, pos));
  }
  Family fam;
  if (starts("torus:")) {
    fam = Family::Torus;
    pos += 6;
  } else if (starts("so:")) {
    fam = Family::SpecialOrthogonal;
    pos += 3;
  } else if (starts("u:")) {
    fam = Family::Unitary;
    pos += 2;
  } else {
    throw ConfigError("bad kind tag \"" + s + "\"");
  }
  std::size_t end = pos;
  while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end])))
    ++end;
  if (end == pos) throw ConfigError("bad kind tag \"" + s + "\": missing size");
  const int n = std::stoi(s.substr(pos, end - pos));
  pos = end;
  switch (fam) {
    case Family::Torus: return GroupKind::torus(n);
    case Family::SpecialOrthogonal: return GroupKind::special_orthogonal(n);
    default: return GroupKind::unitary(n);
  }
}

}  // namespace

GroupKind GroupKind::parse(const std::string& tag) {
  std::size_t pos = 0;
  GroupKind k = parse_impl(tag, pos);
  if (pos != tag.size()) throw ConfigError("bad kind tag \"" + tag + "\"");
  return k;
}

bool GroupKind::operator==(const GroupKind& other) const {
  if (family != other.family) return false;
  if (family == Family::Product) {
    if (factors.size() != other.factors.size()) return false;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (!(factors[i] == other.factors[i])) return false;
    return true;
  }
  return param == other.param;
}

GroupElement GroupElement::identity(const GroupKind& kind) {
  const int n = kind.matrix_dim();
  return GroupElement{kind, Matrix::Identity(n, n)};
}

AlgebraVector AlgebraVector::zero(const GroupKind& kind) {
  return AlgebraVector{kind, Vector::Zero(kind.algebra_dim())};
}

// ---------------------------------------------------------------------------
// Basis and coefficient maps
// ---------------------------------------------------------------------------

std::vector<Matrix> algebra_basis(const GroupKind& kind) {
  const int dim = kind.matrix_dim();
  std::vector<Matrix> basis(kind.algebra_dim(),
                            Matrix::Zero(dim, dim));
  const double inv_sqrt2 = 1.0 / kSqrt2;
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    switch (k.family) {
      case Family::Torus:
        for (int b = 0; b < k.param; ++b) {
          Matrix& e = basis[leaf.coeff + b];
          const int r = leaf.row + 2 * b;
          e(r, r + 1) = inv_sqrt2;
          e(r + 1, r) = -inv_sqrt2;
        }
        break;
      case Family::SpecialOrthogonal: {
        int p = 0;
        for (int i = 0; i < k.param; ++i)
          for (int j = i + 1; j < k.param; ++j, ++p) {
            Matrix& e = basis[leaf.coeff + p];
            e(leaf.row + i, leaf.row + j) = inv_sqrt2;
            e(leaf.row + j, leaf.row + i) = -inv_sqrt2;
          }
        break;
      }
      case Family::Unitary: {
        const int n = k.param;
        for (int d = 0; d < n; ++d)
          basis[leaf.coeff + d](leaf.row + d, leaf.row + d) = cplx(0.0, 1.0);
        int p = 0;
        const int npairs = n * (n - 1) / 2;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++p) {
            Matrix& skew = basis[leaf.coeff + n + p];
            skew(leaf.row + i, leaf.row + j) = inv_sqrt2;
            skew(leaf.row + j, leaf.row + i) = -inv_sqrt2;
            Matrix& sym = basis[leaf.coeff + n + npairs + p];
            sym(leaf.row + i, leaf.row + j) = cplx(0.0, inv_sqrt2);
            sym(leaf.row + j, leaf.row + i) = cplx(0.0, inv_sqrt2);
          }
        break;
      }
      case Family::Product:
        break;  // unreachable: leaves are never products
    }
  }
  return basis;
}

Matrix coeffs_to_matrix(const GroupKind& kind, const Vector& v) {
  if (v.size() != kind.algebra_dim())
    throw ConfigError("coefficient vector has wrong length for kind " +
                      kind.tag());
  const int dim = kind.matrix_dim();
  Matrix m = Matrix::Zero(dim, dim);
  const double inv_sqrt2 = 1.0 / kSqrt2;
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    switch (k.family) {
      case Family::Torus:
        for (int b = 0; b < k.param; ++b) {
          const int r = leaf.row + 2 * b;
          const double x = v[leaf.coeff + b] * inv_sqrt2;
          m(r, r + 1) = x;
          m(r + 1, r) = -x;
        }
        break;
      case Family::SpecialOrthogonal: {
        int p = 0;
        for (int i = 0; i < k.param; ++i)
          for (int j = i + 1; j < k.param; ++j, ++p) {
            const double x = v[leaf.coeff + p] * inv_sqrt2;
            m(leaf.row + i, leaf.row + j) = x;
            m(leaf.row + j, leaf.row + i) = -x;
          }
        break;
      }
      case Family::Unitary: {
        const int n = k.param;
        for (int d = 0; d < n; ++d)
          m(leaf.row + d, leaf.row + d) = cplx(0.0, v[leaf.coeff + d]);
        int p = 0;
        const int npairs = n * (n - 1) / 2;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++p) {
            const double a = v[leaf.coeff + n + p] * inv_sqrt2;
            const double b = v[leaf.coeff + n + npairs + p] * inv_sqrt2;
            m(leaf.row + i, leaf.row + j) = cplx(a, b);
            m(leaf.row + j, leaf.row + i) = cplx(-a, b);
          }
        break;
      }
      case Family::Product:
        break;
    }
  }
  return m;
}

Vector matrix_to_coeffs(const GroupKind& kind, const Matrix& m, double tol) {
  if (m.rows() != kind.matrix_dim() || m.cols() != kind.matrix_dim())
    throw ConfigError("matrix has wrong shape for kind " + kind.tag());
  Vector v = Vector::Zero(kind.algebra_dim());
  const double inv_sqrt2 = 1.0 / kSqrt2;
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    switch (k.family) {
      case Family::Torus:
        for (int b = 0; b < k.param; ++b) {
          const int r = leaf.row + 2 * b;
          // Re tr(e_b^H m) = (m01 - m10)/sqrt(2) on the block.
          v[leaf.coeff + b] =
              (m(r, r + 1).real() - m(r + 1, r).real()) * inv_sqrt2;
        }
        break;
      case Family::SpecialOrthogonal: {
        int p = 0;
        for (int i = 0; i < k.param; ++i)
          for (int j = i + 1; j < k.param; ++j, ++p)
            v[leaf.coeff + p] =
                (m(leaf.row + i, leaf.row + j).real() -
                 m(leaf.row + j, leaf.row + i).real()) * inv_sqrt2;
        break;
      }
      case Family::Unitary: {
        const int n = k.param;
        for (int d = 0; d < n; ++d)
          v[leaf.coeff + d] = m(leaf.row + d, leaf.row + d).imag();
        int p = 0;
        const int npairs = n * (n - 1) / 2;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j, ++p) {
            const cplx up = m(leaf.row + i, leaf.row + j);
            const cplx lo = m(leaf.row + j, leaf.row + i);
            v[leaf.coeff + n + p] = (up.real() - lo.real()) * inv_sqrt2;
            v[leaf.coeff + n + npairs + p] = (up.imag() + lo.imag()) * inv_sqrt2;
          }
        break;
      }
      case Family::Product:
        break;
    }
  }
  const Matrix recon = coeffs_to_matrix(kind, v);
  const double resid = (m - recon).norm();
  if (resid > tol)
    throw NotInAlgebraError("matrix is not in the Lie algebra of " +
                            kind.tag() + " (projection residual " +
                            std::to_string(resid) + ")");
  return v;
}

// ---------------------------------------------------------------------------
// Exponential map and logarithms
// ---------------------------------------------------------------------------

Matrix group_exp(const GroupKind& kind, const Matrix& algebra_element) {
  if (algebra_element.rows() != kind.matrix_dim() ||
      algebra_element.cols() != kind.matrix_dim())
    throw ConfigError("algebra matrix has wrong shape for kind " + kind.tag());
  const int dim = kind.matrix_dim();
  Matrix out = Matrix::Zero(dim, dim);
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    const int bd = k.matrix_dim();
    if (k.family == Family::Torus) {
      for (int b = 0; b < k.param; ++b) {
        const int r = leaf.row + 2 * b;
        torus_block_rotation(algebra_element(r, r + 1).real(), out, r);
      }
    } else {
      out.block(leaf.row, leaf.row, bd, bd) =
          expm_scaling_squaring(algebra_element.block(leaf.row, leaf.row, bd, bd));
    }
  }
  return out;
}

Matrix exp_from_coeffs(const GroupKind& kind, const Vector& v, double scale) {
  if (v.size() != kind.algebra_dim())
    throw ConfigError("coefficient vector has wrong length for kind " +
                      kind.tag());
  const int dim = kind.matrix_dim();
  Matrix out = Matrix::Zero(dim, dim);
  const double inv_sqrt2 = 1.0 / kSqrt2;
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    if (k.family == Family::Torus) {
      for (int b = 0; b < k.param; ++b)
        torus_block_rotation(scale * v[leaf.coeff + b] * inv_sqrt2, out,
                             leaf.row + 2 * b);
    } else {
      const int bd = k.matrix_dim();
      Vector sub = scale * v.segment(leaf.coeff, k.algebra_dim());
      out.block(leaf.row, leaf.row, bd, bd) =
          expm_scaling_squaring(coeffs_to_matrix(k, sub));
    }
  }
  return out;
}

double so2_log(const Eigen::Matrix2d& block) {
  return std::atan2(block(0, 1), block(0, 0));
}

Vector torus_angles(const GroupElement& g) {
  Vector angles(g.kind.torus_coordinates());
  int idx = 0;
  for (const Leaf& leaf : leaves_of(g.kind)) {
    const GroupKind& k = *leaf.kind;
    if (k.family != Family::Torus) continue;  // non-torus leaves have no angles
    for (int b = 0; b < k.param; ++b) {
      const int r = leaf.row + 2 * b;
      Eigen::Matrix2d blk;
      blk << g.mat(r, r).real(), g.mat(r, r + 1).real(),
             g.mat(r + 1, r).real(), g.mat(r + 1, r + 1).real();
      angles[idx++] = so2_log(blk);
    }
  }
  return angles;
}

// ---------------------------------------------------------------------------
// Group operations
// ---------------------------------------------------------------------------

GroupElement group_mul(const GroupElement& a, const GroupElement& b) {
  if (a.kind != b.kind) throw ConfigError("group_mul: mismatched kinds");
  return GroupElement{a.kind, a.mat * b.mat};
}

GroupElement group_inv(const GroupElement& a) {
  return GroupElement{a.kind, a.mat.adjoint()};
}

void right_multiply_exp(const GroupKind& kind, Matrix& g, const Vector& v,
                        double scale) {
  const double inv_sqrt2 = 1.0 / kSqrt2;
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    const int bd = k.matrix_dim();
    if (k.family == Family::Torus) {
      // Right-multiplying a block-diagonal matrix by block rotations touches
      // only the two columns of each block.
      for (int b = 0; b < k.param; ++b) {
        const int r = leaf.row + 2 * b;
        const double angle = scale * v[leaf.coeff + b] * inv_sqrt2;
        const double c = std::cos(angle), s = std::sin(angle);
        const cplx g00 = g(r, r), g01 = g(r, r + 1);
        const cplx g10 = g(r + 1, r), g11 = g(r + 1, r + 1);
        g(r, r) = g00 * c - g01 * s;
        g(r, r + 1) = g00 * s + g01 * c;
        g(r + 1, r) = g10 * c - g11 * s;
        g(r + 1, r + 1) = g10 * s + g11 * c;
      }
    } else {
      Vector sub = scale * v.segment(leaf.coeff, k.algebra_dim());
      const Matrix rot = expm_scaling_squaring(coeffs_to_matrix(k, sub));
      g.block(leaf.row, leaf.row, bd, bd) =
          g.block(leaf.row, leaf.row, bd, bd) * rot;
    }
  }
}

void right_multiply_exp(GroupElement& g, const Vector& v, double scale) {
  right_multiply_exp(g.kind, g.mat, v, scale);
}

double unitarity_defect(const GroupKind& kind, const Matrix& g) {
  const int n = kind.matrix_dim();
  return (g.adjoint() * g - Matrix::Identity(n, n)).norm();
}

double unitarity_defect(const GroupElement& g) {
  return unitarity_defect(g.kind, g.mat);
}

bool is_on_group(const GroupElement& g, double tol) {
  if (unitarity_defect(g) > tol) return false;
  // Determinant checks scale with the caller's tolerance but never loosen
  // past it; unitarity alone bounds |det| = 1, so this pins the sign branch.
  const double det_tol = std::max(tol, 1e-6);
  for (const Leaf& leaf : leaves_of(g.kind)) {
    const GroupKind& k = *leaf.kind;
    const int bd = k.matrix_dim();
    // Off-block entries must vanish for product/torus structure.
    for (int r = 0; r < g.kind.matrix_dim(); ++r) {
      if (r >= leaf.row && r < leaf.row + bd) continue;
      for (int c = leaf.row; c < leaf.row + bd; ++c)
        if (std::abs(g.mat(r, c)) > tol) return false;
    }
    if (k.family == Family::Torus) {
      for (int b = 0; b < k.param; ++b) {
        const int r = leaf.row + 2 * b;
        // 2x2 sub-blocks must themselves be rotations (det +1) and the
        // cross terms between different torus blocks must vanish.
        const double det = (g.mat(r, r) * g.mat(r + 1, r + 1) -
                            g.mat(r, r + 1) * g.mat(r + 1, r)).real();
        if (std::abs(det - 1.0) > det_tol) return false;
        for (int rr = leaf.row; rr < leaf.row + bd; ++rr) {
          if (rr == r || rr == r + 1) continue;
          if (std::abs(g.mat(rr, r)) > tol || std::abs(g.mat(rr, r + 1)) > tol)
            return false;
        }
      }
      continue;
    }
    if (k.family == Family::SpecialOrthogonal) {
      if (g.mat.block(leaf.row, leaf.row, bd, bd).imag().norm() > tol)
        return false;
      const double det =
          g.mat.block(leaf.row, leaf.row, bd, bd).real().determinant();
      if (std::abs(det - 1.0) > det_tol) return false;
    }
  }
  return true;
}

void reorthonormalize(const GroupKind& kind, Matrix& g) {
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    const int bd = k.matrix_dim();
    if (k.family == Family::Torus) {
      for (int b = 0; b < k.param; ++b) {
        const int r = leaf.row + 2 * b;
        // Nearest rotation to a 2x2 block in Frobenius norm.
        const double angle =
            std::atan2(g(r, r + 1).real() - g(r + 1, r).real(),
                       g(r, r).real() + g(r + 1, r + 1).real());
        const double c = std::cos(angle), s = std::sin(angle);
        g(r, r) = c;
        g(r, r + 1) = s;
        g(r + 1, r) = -s;
        g(r + 1, r + 1) = c;
      }
      continue;
    }
    Matrix x = g.block(leaf.row, leaf.row, bd, bd);
    if (k.family == Family::SpecialOrthogonal) x.imag().setZero();
    const Matrix eye = Matrix::Identity(bd, bd);
    for (int it = 0; it < 30; ++it) {
      const Matrix xinv_h = x.partialPivLu().inverse().adjoint();
      x = 0.5 * (x + xinv_h);
      if ((x.adjoint() * x - eye).norm() <= 1e-14) break;
    }
    g.block(leaf.row, leaf.row, bd, bd) = x;
  }
}

void reorthonormalize(GroupElement& g) { reorthonormalize(g.kind, g.mat); }

// ---------------------------------------------------------------------------
// Haar sampling
// ---------------------------------------------------------------------------

namespace {

Matrix haar_so(int n, Rng& rng) {
  RealMatrix z(n, n);
  fill_gaussian(rng, z);
  Eigen::HouseholderQR<RealMatrix> qr(z);
  RealMatrix q = qr.householderQ() * RealMatrix::Identity(n, n);
  const RealMatrix r = qr.matrixQR();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
  return q.cast<cplx>();
}

Matrix haar_u(int n, Rng& rng) {
  Matrix z(n, n);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double re = nd(rng);
      const double im = nd(rng);
      z(r, c) = cplx(re, im);
    }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

}  // namespace

GroupElement haar_sample(const GroupKind& kind, Rng& rng) {
  const int dim = kind.matrix_dim();
  Matrix m = Matrix::Zero(dim, dim);
  for (const Leaf& leaf : leaves_of(kind)) {
    const GroupKind& k = *leaf.kind;
    const int bd = k.matrix_dim();
    switch (k.family) {
      case Family::Torus: {
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        for (int b = 0; b < k.param; ++b)
          torus_block_rotation(u(rng), m, leaf.row + 2 * b);
        break;
      }
      case Family::SpecialOrthogonal:
        m.block(leaf.row, leaf.row, bd, bd) = haar_so(k.param, rng);
        break;
      case Family::Unitary:
        m.block(leaf.row, leaf.row, bd, bd) = haar_u(k.param, rng);
        break;
      case Family::Product:
        break;
    }
  }
  return GroupElement{kind, std::move(m)};
}

// ---------------------------------------------------------------------------
// Flattening
// ---------------------------------------------------------------------------

int flat_dim(const GroupKind& kind) {
  const int n = kind.matrix_dim();
  return kind.is_complex() ? 2 * n * n : n * n;
}

void flatten_element(const GroupKind& kind, const Matrix& g,
                     Eigen::Ref<Eigen::RowVectorXd> out) {
  const int n = kind.matrix_dim();
  const bool complex_kind = kind.is_complex();
  if (out.size() != flat_dim(kind))
    throw ConfigError("flatten_element: output has wrong length");
  int idx = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      out[idx++] = g(r, c).real();
      if (complex_kind) out[idx++] = g(r, c).imag();
    }
}

void flatten_element(const GroupElement& g, Eigen::Ref<Eigen::RowVectorXd> out) {
  flatten_element(g.kind, g.mat, out);
}

}  // namespace liegen::lie
