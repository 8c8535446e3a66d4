// src/datasets.cpp

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

#include "liegen/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "liegen/errors.hpp"
#include "liegen/rng.hpp"
#include "liegen/serialize.hpp"

namespace liegen::data {

namespace {

using lie::cplx;
using lie::GroupElement;
using lie::GroupKind;
using lie::Matrix;
using lie::Vector;

constexpr double kTwoPi = 2.0 * lie::kPi;

constexpr std::uint64_t kSampleTag = kSampleStreamTag;
constexpr std::uint64_t kParamTag = kParamStreamTag;
constexpr std::uint64_t kSplitTag = kSplitStreamTag;

/// Uniform double in [0, 1) built from the top 53 bits of one engine output,
/// so the value stream is independent of the standard library's
/// uniform_real_distribution implementation.
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(Rng& rng, const std::pair<double, double>& range) {
  return range.first + (range.second - range.first) * uniform01(rng);
}

void check_range(const std::pair<double, double>& range, const char* name,
                 bool require_nonnegative) {
  if (!(range.first <= range.second))
    throw ConfigError(std::string(name) + " range must be ordered (lo <= hi)");
  if (require_nonnegative && range.first < 0.0)
    throw ConfigError(std::string(name) + " range must be nonnegative");
  if (!std::isfinite(range.first) || !std::isfinite(range.second))
    throw ConfigError(std::string(name) + " range must be finite");
}

void check_n_samples(int n_samples) {
  if (n_samples < 0) throw ConfigError("n_samples must be nonnegative");
}

GroupElement torus_element(const GroupKind& kind, const Vector& angles) {
  return GroupElement{kind,
                      lie::exp_from_coeffs(kind, lie::kSqrt2 * angles, 1.0)};
}

double wrap_angle(double x) {
  double a = std::fmod(x, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod(-tiny) + 2pi can round to exactly 2pi
  return a;
}

nlohmann::json range_json(const std::pair<double, double>& range) {
  return nlohmann::json::array({range.first, range.second});
}

std::pair<double, double> range_from_json(const nlohmann::json& j,
                                          const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("parameter '" + key + "' must be a [lo, hi] array");
  return {j[0].get<double>(), j[1].get<double>()};
}

const nlohmann::json& require_key(const nlohmann::json& params,
                                  const std::string& key) {
  auto it = params.find(key);
  if (it == params.end())
    throw ConfigError("missing generator parameter '" + key + "'");
  return *it;
}

int int_param(const nlohmann::json& params, const std::string& key) {
  const nlohmann::json& v = require_key(params, key);
  if (!v.is_number_integer())
    throw ConfigError("parameter '" + key + "' must be an integer");
  return v.get<int>();
}

// ---------------------------------------------------------------------------
// Pauli / Kronecker helpers for the TFIM ensemble
// ---------------------------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix pauli_x() {
  Matrix m(2, 2);
  m << cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0);
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0);
  return m;
}

/// I x ... x ops[0] x ops[1] x ... x I with ops placed at `site`,
/// `site`+1, ... of a `qubits`-site chain.
Matrix chain_operator(int qubits, int site, const std::vector<Matrix>& ops) {
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < qubits; ++s) {
    const int k = s - site;
    if (k >= 0 && k < static_cast<int>(ops.size()))
      out = kron(out, ops[static_cast<std::size_t>(k)]);
    else
      out = kron(out, Matrix::Identity(2, 2));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

int MaskBitmap::set_count() const {
  int n = 0;
  for (std::uint8_t p : pixels) n += (p != 0);
  return n;
}

MaskBitmap load_mask_pgm(const std::string& path) {
  const std::string text = serialize::read_text_file(path);
  // Tokenize with '#'-to-end-of-line comments removed.
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      cleaned.push_back('\n');
    } else {
      cleaned.push_back(text[i]);
    }
  }
  std::istringstream in(cleaned);
  std::string magic;
  in >> magic;
  if (magic != "P2")
    throw ConfigError("mask file " + path + ": expected plain PGM magic 'P2'");
  long long cols = 0, rows = 0, maxval = 0;
  if (!(in >> cols >> rows >> maxval) || cols <= 0 || rows <= 0 || maxval <= 0)
    throw ConfigError("mask file " + path + ": malformed PGM header");
  MaskBitmap mask;
  mask.rows = static_cast<int>(rows);
  mask.cols = static_cast<int>(cols);
  mask.pixels.assign(static_cast<std::size_t>(rows * cols), 0);
  for (long long i = 0; i < rows * cols; ++i) {
    long long v = 0;
    if (!(in >> v) || v < 0 || v > maxval)
      throw ConfigError("mask file " + path + ": bad pixel value at index " +
                        std::to_string(i));
    mask.pixels[static_cast<std::size_t>(i)] = (2 * v > maxval) ? 1 : 0;
  }
  return mask;
}

MaskBitmap load_mask_csv(const std::string& path) {
  const std::vector<std::string> lines =
      serialize::split_lines(serialize::read_text_file(path));
  if (lines.empty())
    throw ConfigError("mask file " + path + ": empty");
  auto parse_pair = [&](const std::string& line, int index) {
    long long a = 0, b = 0;
    char comma = 0;
    std::istringstream in(line);
    if (!(in >> a >> comma >> b) || comma != ',')
      throw ConfigError("mask file " + path + ": malformed line " +
                        std::to_string(index + 1));
    std::string rest;
    if (in >> rest)
      throw ConfigError("mask file " + path + ": trailing tokens on line " +
                        std::to_string(index + 1));
    return std::pair<long long, long long>(a, b);
  };
  const auto [rows, cols] = parse_pair(lines[0], 0);
  if (rows <= 0 || cols <= 0)
    throw ConfigError("mask file " + path + ": dimensions must be positive");
  MaskBitmap mask;
  mask.rows = static_cast<int>(rows);
  mask.cols = static_cast<int>(cols);
  mask.pixels.assign(static_cast<std::size_t>(rows * cols), 0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [r, c] = parse_pair(lines[i], static_cast<int>(i));
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw ConfigError("mask file " + path + ": pixel out of range on line " +
                        std::to_string(i + 1));
    mask.pixels[static_cast<std::size_t>(r * cols + c)] = 1;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Torus generators
// ---------------------------------------------------------------------------

Dataset checkerboard_torus(int m, int n_samples, std::uint64_t seed) {
  if (m < 2 || m % 2 != 0)
    throw ConfigError("checkerboard board size must be even and >= 2");
  check_n_samples(n_samples);

  std::vector<std::pair<int, int>> black;
  black.reserve(static_cast<std::size_t>(m) * m / 2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if ((i + j) % 2 == 0) black.emplace_back(i, j);

  Dataset out;
  out.kind = GroupKind::torus(2);
  out.items.reserve(static_cast<std::size_t>(n_samples));
  const double cell = kTwoPi / m;
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, kSampleTag, static_cast<std::uint64_t>(s));
    const auto [i, j] = black[rng() % black.size()];
    Vector angles(2);
    angles << (i + uniform01(rng)) * cell, (j + uniform01(rng)) * cell;
    out.items.push_back(torus_element(out.kind, angles));
  }
  out.meta = {{"generator", "checkerboard"},
              {"params", {{"m", m}, {"n_samples", n_samples}}},
              {"seed", seed}};
  return out;
}

Dataset maze_from_mask(const MaskBitmap& mask, int n_samples,
                       std::uint64_t seed) {
  if (mask.rows <= 0 || mask.cols <= 0 ||
      mask.pixels.size() !=
          static_cast<std::size_t>(mask.rows) * mask.cols)
    throw ConfigError("mask dimensions are inconsistent");
  check_n_samples(n_samples);
  std::vector<std::pair<int, int>> set;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c)
      if (mask.at(r, c)) set.emplace_back(r, c);
  if (set.empty()) throw ConfigError("mask has no set pixels");

  Dataset out;
  out.kind = GroupKind::torus(2);
  out.items.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, kSampleTag, static_cast<std::uint64_t>(s));
    const auto [r, c] = set[rng() % set.size()];
    Vector angles(2);
    angles << kTwoPi * (c + uniform01(rng)) / mask.cols,
        kTwoPi * (mask.rows - 1 - r + uniform01(rng)) / mask.rows;
    out.items.push_back(torus_element(out.kind, angles));
  }
  nlohmann::json set_json = nlohmann::json::array();
  for (const auto& [r, c] : set) set_json.push_back({r, c});
  out.meta = {{"generator", "maze"},
              {"params",
               {{"rows", mask.rows},
                {"cols", mask.cols},
                {"set", std::move(set_json)},
                {"n_samples", n_samples}}},
              {"seed", seed}};
  return out;
}

// ---------------------------------------------------------------------------
// SO(n) mixture
// ---------------------------------------------------------------------------

Dataset so_n_mixture(int n, int components,
                     std::pair<double, double> concentration_range,
                     int n_samples, std::uint64_t seed) {
  if (n < 2) throw ConfigError("so_n_mixture requires n >= 2");
  if (components < 1) throw ConfigError("so_n_mixture requires components >= 1");
  check_range(concentration_range, "concentration", /*require_nonnegative=*/true);
  check_n_samples(n_samples);

  Dataset out;
  out.kind = GroupKind::special_orthogonal(n);
  const int d = out.kind.algebra_dim();

  Rng param_rng = make_stream(seed, kParamTag);
  std::vector<Matrix> means;
  std::vector<double> sigma;
  means.reserve(static_cast<std::size_t>(components));
  sigma.reserve(static_cast<std::size_t>(components));
  for (int j = 0; j < components; ++j) {
    means.push_back(lie::haar_sample(out.kind, param_rng).mat);
    sigma.push_back(uniform_in(param_rng, concentration_range));
  }

  out.items.reserve(static_cast<std::size_t>(n_samples));
  Vector z(d);
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, kSampleTag, static_cast<std::uint64_t>(s));
    const std::size_t j = rng() % means.size();
    fill_gaussian(rng, z);
    GroupElement g{out.kind, means[j]};
    lie::right_multiply_exp(g, z, sigma[j]);
    out.items.push_back(std::move(g));
  }
  out.meta = {{"generator", "so_mixture"},
              {"params",
               {{"n", n},
                {"components", components},
                {"concentration", range_json(concentration_range)},
                {"n_samples", n_samples}}},
              {"seed", seed}};
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver and U(n) ensembles
// ---------------------------------------------------------------------------

HermitianEigen jacobi_hermitian(const Matrix& h, double off_tol,
                                int max_sweeps) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n) throw ConfigError("jacobi_hermitian: matrix not square");
  const double scale = std::max(1.0, h.norm());
  if ((h - h.adjoint()).norm() > 1e-13 * scale)
    throw ConfigError("jacobi_hermitian: matrix not Hermitian");

  Matrix a = h;
  Matrix v = Matrix::Identity(n, n);
  auto off_norm = [&]() {
    double sq = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = 0; q < n; ++q)
        if (p != q) sq += std::norm(a(p, q));
    return std::sqrt(sq);
  };

  bool converged = off_norm() <= off_tol;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx c = a(p, q);
        const double mag = std::abs(c);
        if (mag < 1e-300) continue;
        const double phi = std::arg(c);
        const double theta =
            0.5 * std::atan2(2.0 * mag, a(p, p).real() - a(q, q).real());
        const double cs = std::cos(theta);
        const double sn = std::sin(theta);
        const cplx eip(std::cos(phi), std::sin(phi));
        const cplx ein = std::conj(eip);
        // Columns: A <- A * J with J(p,p)=cs, J(p,q)=-sn*e^{i phi},
        // J(q,p)=sn*e^{-i phi}, J(q,q)=cs; then rows: A <- J^H * A.
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = cs * akp + sn * ein * akq;
          a(k, q) = -sn * eip * akp + cs * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = cs * apk + sn * eip * aqk;
          a(q, k) = -sn * ein * apk + cs * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cs * vkp + sn * ein * vkq;
          v(k, q) = -sn * eip * vkp + cs * vkq;
        }
        // The rotation annihilates (p,q) analytically; pin it (and the real
        // diagonal) so round-off residue cannot linger.
        a(p, q) = cplx(0, 0);
        a(q, p) = cplx(0, 0);
        a(p, p) = cplx(a(p, p).real(), 0);
        a(q, q) = cplx(a(q, q).real(), 0);
      }
    }
    converged = off_norm() <= off_tol;
  }
  if (!converged)
    throw NumericError(
        "jacobi_hermitian: eigensolver did not converge to off-diagonal "
        "norm <= " +
        std::to_string(off_tol) + " within " + std::to_string(max_sweeps) +
        " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x).real() < a(y, y).real();
  });
  HermitianEigen result;
  result.values.resize(n);
  result.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    result.values[i] = a(order[static_cast<std::size_t>(i)],
                         order[static_cast<std::size_t>(i)])
                           .real();
    result.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return result;
}

Matrix unitary_from_hamiltonian(const Matrix& h) {
  const HermitianEigen eig = jacobi_hermitian(h);
  const Eigen::Index n = h.rows();
  Eigen::VectorXcd phases(n);
  for (Eigen::Index k = 0; k < n; ++k)
    phases[k] = cplx(std::cos(eig.values[k]), -std::sin(eig.values[k]));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

Matrix oscillator_hamiltonian(int n_grid, double omega, double x0) {
  if (n_grid < 2) throw ConfigError("oscillator_hamiltonian requires n_grid >= 2");
  const double h = 2.0 / n_grid;
  const double inv_h2 = 1.0 / (h * h);
  Matrix ham = Matrix::Zero(n_grid, n_grid);
  for (int i = 0; i < n_grid; ++i) {
    const double xi = -1.0 + i * h;
    const double vi = 0.5 * omega * omega * (xi - x0) * (xi - x0);
    ham(i, i) = cplx(-2.0 * inv_h2 - vi, 0);
    ham(i, (i + 1) % n_grid) += cplx(inv_h2, 0);
    ham(i, (i - 1 + n_grid) % n_grid) += cplx(inv_h2, 0);
  }
  return ham;
}

Matrix tfim_hamiltonian(int qubits, const std::vector<double>& J,
                        const std::vector<double>& g) {
  if (qubits < 1) throw ConfigError("tfim_hamiltonian requires qubits >= 1");
  if (static_cast<int>(J.size()) != qubits - 1 ||
      static_cast<int>(g.size()) != qubits)
    throw ConfigError("tfim_hamiltonian: J needs qubits-1 entries, g needs qubits");
  const int n = 1 << qubits;
  Matrix ham = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < qubits; ++i)
    ham -= J[static_cast<std::size_t>(i)] *
           chain_operator(qubits, i, {pauli_z(), pauli_z()});
  for (int i = 0; i < qubits; ++i)
    ham -= g[static_cast<std::size_t>(i)] *
           chain_operator(qubits, i, {pauli_x()});
  return ham;
}

Dataset quantum_oscillator_un(int n_grid, int n_samples,
                              std::pair<double, double> omega_range,
                              std::pair<double, double> x0_range,
                              std::uint64_t seed) {
  if (n_grid < 2) throw ConfigError("quantum_oscillator_un requires n_grid >= 2");
  check_range(omega_range, "omega", /*require_nonnegative=*/false);
  check_range(x0_range, "x0", /*require_nonnegative=*/false);
  check_n_samples(n_samples);

  Dataset out;
  out.kind = GroupKind::unitary(n_grid);
  out.items.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, kSampleTag, static_cast<std::uint64_t>(s));
    const double omega = uniform_in(rng, omega_range);
    const double x0 = uniform_in(rng, x0_range);
    out.items.push_back(GroupElement{
        out.kind,
        unitary_from_hamiltonian(oscillator_hamiltonian(n_grid, omega, x0))});
  }
  out.meta = {{"generator", "oscillator"},
              {"params",
               {{"n_grid", n_grid},
                {"omega", range_json(omega_range)},
                {"x0", range_json(x0_range)},
                {"n_samples", n_samples}}},
              {"seed", seed}};
  return out;
}

Dataset tfim_un(int qubits, std::pair<double, double> J_range,
                std::pair<double, double> g_range, int n_samples,
                std::uint64_t seed) {
  if (qubits < 1 || qubits > 4)
    throw ConfigError("tfim_un requires 1 <= qubits <= 4");
  check_range(J_range, "J", /*require_nonnegative=*/false);
  check_range(g_range, "g", /*require_nonnegative=*/false);
  check_n_samples(n_samples);

  Dataset out;
  out.kind = GroupKind::unitary(1 << qubits);
  out.items.reserve(static_cast<std::size_t>(n_samples));
  std::vector<double> J(static_cast<std::size_t>(qubits - 1));
  std::vector<double> g(static_cast<std::size_t>(qubits));
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = make_stream(seed, kSampleTag, static_cast<std::uint64_t>(s));
    // Draw order: couplings J_0..J_{q-2}, then fields g_0..g_{q-1}.
    for (double& Ji : J) Ji = uniform_in(rng, J_range);
    for (double& gi : g) gi = uniform_in(rng, g_range);
    out.items.push_back(GroupElement{
        out.kind, unitary_from_hamiltonian(tfim_hamiltonian(qubits, J, g))});
  }
  out.meta = {{"generator", "tfim"},
              {"params",
               {{"qubits", qubits},
                {"J", range_json(J_range)},
                {"g", range_json(g_range)},
                {"n_samples", n_samples}}},
              {"seed", seed}};
  return out;
}

// ---------------------------------------------------------------------------
// Torus angle I/O
// ---------------------------------------------------------------------------

Dataset dataset_from_angles(const Eigen::MatrixXd& angles) {
  if (angles.cols() < 1)
    throw ConfigError("angle matrix must have at least one column");
  Dataset out;
  out.kind = GroupKind::torus(static_cast<int>(angles.cols()));
  out.items.reserve(static_cast<std::size_t>(angles.rows()));
  for (Eigen::Index r = 0; r < angles.rows(); ++r) {
    Vector wrapped(angles.cols());
    for (Eigen::Index c = 0; c < angles.cols(); ++c)
      wrapped[c] = wrap_angle(angles(r, c));
    out.items.push_back(torus_element(out.kind, wrapped));
  }
  return out;
}

Eigen::MatrixXd dataset_angles(const Dataset& dataset) {
  if (!dataset.kind.is_abelian())
    throw ConfigError("dataset_angles requires a torus-power kind, got " +
                      dataset.kind.tag());
  const int k = dataset.kind.torus_coordinates();
  Eigen::MatrixXd angles(dataset.size(), k);
  for (int i = 0; i < dataset.size(); ++i) {
    const Vector a = lie::torus_angles(dataset.items[static_cast<std::size_t>(i)]);
    for (int c = 0; c < k; ++c)
      angles(i, c) = a[c] < 0.0 ? a[c] + kTwoPi : a[c];
  }
  return angles;
}

Dataset load_angles_csv(const std::string& path, int dims) {
  if (dims < 1) throw ConfigError("dims must be >= 1");
  const std::vector<std::string> lines =
      serialize::split_lines(serialize::read_text_file(path));
  Eigen::MatrixXd angles(static_cast<Eigen::Index>(lines.size()), dims);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream in(lines[i]);
    std::string cell;
    int col = 0;
    while (std::getline(in, cell, ',')) {
      if (col >= dims)
        throw ConfigError(path + ": line " + std::to_string(i + 1) + " has more than " +
                          std::to_string(dims) + " columns");
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
      if (end == begin || *end != '\0' || !std::isfinite(value))
        throw ConfigError(path + ": malformed value in line " +
                          std::to_string(i + 1) + ", column " +
                          std::to_string(col + 1));
      angles(static_cast<Eigen::Index>(i), col++) = value;
    }
    if (col != dims)
      throw ConfigError(path + ": line " + std::to_string(i + 1) + " has " +
                        std::to_string(col) + " columns, expected " +
                        std::to_string(dims));
  }
  Dataset out = dataset_from_angles(angles);
  out.meta = {{"generator", "angles_csv"},
              {"params", {{"path", path}, {"dims", dims}}},
              {"seed", 0}};
  return out;
}

void save_angles_csv(const Dataset& dataset, const std::string& path) {
  const Eigen::MatrixXd angles = dataset_angles(dataset);
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < angles.rows(); ++r) {
    for (Eigen::Index c = 0; c < angles.cols(); ++c) {
      if (c) out << ',';
      out << angles(r, c);
    }
    out << '\n';
  }
  serialize::write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Split and JSONL serialization
// ---------------------------------------------------------------------------

std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio,
                                  std::uint64_t seed) {
  const int m = dataset.size();
  if (m < 10) throw ConfigError("split requires at least 10 items");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must lie in (0, 1)");

  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng = make_stream(seed, kSplitTag);
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const int n_train = static_cast<int>(std::floor(ratio * m));

  auto make_part = [&](int begin, int end, const char* role) {
    Dataset part;
    part.kind = dataset.kind;
    part.items.reserve(static_cast<std::size_t>(end - begin));
    for (int i = begin; i < end; ++i)
      part.items.push_back(dataset.items[static_cast<std::size_t>(
          perm[static_cast<std::size_t>(i)])]);
    part.meta = {{"generator", "split"},
                 {"params", {{"role", role}, {"ratio", ratio}}},
                 {"seed", seed},
                 {"source", dataset.meta}};
    return part;
  };
  return {make_part(0, n_train, "train"), make_part(n_train, m, "test")};
}

void save_jsonl(const Dataset& dataset, const std::string& path) {
  std::ostringstream out;
  const nlohmann::json header = {{"kind", dataset.kind.tag()},
                                 {"meta", dataset.meta},
                                 {"count", dataset.size()}};
  out << header.dump() << '\n';
  for (const GroupElement& g : dataset.items)
    out << serialize::element_to_json(g).dump() << '\n';
  serialize::write_text_file(path, out.str());
}

Dataset load_jsonl(const std::string& path) {
  const std::vector<std::string> lines =
      serialize::split_lines(serialize::read_text_file(path));
  if (lines.empty()) throw ConfigError(path + ": empty dataset file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(lines[0]);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": bad header line: " + e.what());
  }
  if (!header.is_object() || !header.contains("kind"))
    throw ConfigError(path + ": header must be an object with a 'kind' field");
  Dataset out;
  out.kind = GroupKind::parse(header["kind"].get<std::string>());
  out.meta = header.value("meta", nlohmann::json::object());
  const int count = header.value("count", static_cast<int>(lines.size()) - 1);
  if (count != static_cast<int>(lines.size()) - 1)
    throw ConfigError(path + ": header count " + std::to_string(count) +
                      " does not match " + std::to_string(lines.size() - 1) +
                      " element lines");
  out.items.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": bad element on line " + std::to_string(i + 1) +
                        ": " + e.what());
    }
    GroupElement g = serialize::element_from_json(out.kind, j);
    if (!lie::is_on_group(g, 1e-8))
      throw ConfigError(path + ": element on line " + std::to_string(i + 1) +
                        " is off the group manifold");
    out.items.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generator dispatch
// ---------------------------------------------------------------------------

std::vector<std::string> generator_names() {
  return {"angles_csv", "checkerboard", "maze",
          "oscillator", "so_mixture",   "tfim"};
}

Dataset generate(const nlohmann::json& genspec) {
  if (!genspec.is_object() || !genspec.contains("generator") ||
      !genspec["generator"].is_string())
    throw ConfigError("generator spec must be an object with a 'generator' name");
  const std::string name = genspec["generator"].get<std::string>();
  const nlohmann::json params = genspec.value("params", nlohmann::json::object());
  if (!params.is_object())
    throw ConfigError("generator 'params' must be an object");
  const std::uint64_t seed = genspec.value("seed", 0ULL);

  if (name == "checkerboard") {
    return checkerboard_torus(int_param(params, "m"),
                              int_param(params, "n_samples"), seed);
  }
  if (name == "maze") {
    MaskBitmap mask;
    if (params.contains("mask_pgm")) {
      mask = load_mask_pgm(params["mask_pgm"].get<std::string>());
    } else if (params.contains("mask_csv")) {
      mask = load_mask_csv(params["mask_csv"].get<std::string>());
    } else {
      mask.rows = int_param(params, "rows");
      mask.cols = int_param(params, "cols");
      if (mask.rows <= 0 || mask.cols <= 0)
        throw ConfigError("mask dimensions must be positive");
      mask.pixels.assign(
          static_cast<std::size_t>(mask.rows) * mask.cols, 0);
      for (const nlohmann::json& px : require_key(params, "set")) {
        if (!px.is_array() || px.size() != 2)
          throw ConfigError("mask 'set' entries must be [row, col] pairs");
        const int r = px[0].get<int>(), c = px[1].get<int>();
        if (r < 0 || r >= mask.rows || c < 0 || c >= mask.cols)
          throw ConfigError("mask 'set' pixel out of range");
        mask.pixels[static_cast<std::size_t>(r) * mask.cols + c] = 1;
      }
    }
    return maze_from_mask(mask, int_param(params, "n_samples"), seed);
  }
  if (name == "angles_csv") {
    return load_angles_csv(require_key(params, "path").get<std::string>(),
                           int_param(params, "dims"));
  }
  if (name == "so_mixture") {
    return so_n_mixture(int_param(params, "n"), int_param(params, "components"),
                        range_from_json(require_key(params, "concentration"),
                                        "concentration"),
                        int_param(params, "n_samples"), seed);
  }
  if (name == "oscillator") {
    return quantum_oscillator_un(
        int_param(params, "n_grid"), int_param(params, "n_samples"),
        range_from_json(require_key(params, "omega"), "omega"),
        range_from_json(require_key(params, "x0"), "x0"), seed);
  }
  if (name == "tfim") {
    return tfim_un(int_param(params, "qubits"),
                   range_from_json(require_key(params, "J"), "J"),
                   range_from_json(require_key(params, "g"), "g"),
                   int_param(params, "n_samples"), seed);
  }
  std::string valid;
  for (const std::string& g : generator_names()) {
    if (!valid.empty()) valid += ", ";
    valid += g;
  }
  throw ConfigError("unknown generator '" + name + "'; valid generators: " + valid);
}

}  // namespace liegen::data
