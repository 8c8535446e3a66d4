// liegen/datasets.hpp

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
// Dataset generators and loaders: torus synthetics (checkerboard, bitmap
// masks), torus angle CSV files, SO(n) wrapped-Gaussian mixtures, U(n)
// quantum-evolution ensembles, and train/test splitting.
//
// Determinism contract: every generator takes a root seed and derives one
// RNG substream per sample (make_stream(seed, kSampleTag, index)), so sample
// i is a pure function of (parameters, seed, i).  The returned meta record
// carries the generator name, all parameters, and the seed; feeding it back
// through generate() reproduces the items bit-exactly.

#pragma once

#include <json.hpp>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liegen/lie.hpp"

namespace liegen::data {

// Stream labels used by every generator: sample i draws from
// make_stream(seed, kSampleStreamTag, i); component-level parameters
// (mixture means and concentrations) come from make_stream(seed,
// kParamStreamTag); split() shuffles with make_stream(seed,
// kSplitStreamTag).  Public so tests and parallel drivers can reproduce any
// single sample in isolation.  Uniform scalars are drawn as
// (rng() >> 11) * 2^-53 mapped affinely onto the range, one engine output
// per scalar, in the documented per-generator order.
inline constexpr std::uint64_t kSampleStreamTag = 0xDA7A;
inline constexpr std::uint64_t kParamStreamTag = 0xC03F;
inline constexpr std::uint64_t kSplitStreamTag = 0x5A17;

/// A homogeneous collection of group elements plus its provenance record.
///
/// Invariants: every item is on the group at tolerance 1e-8 and has the same
/// kind; meta is either empty or an object {"generator", "params", "seed"}
/// sufficient for generate() to rebuild the items bit-exactly (loaders record
/// the source path instead, so their reproducibility is up to the file).
struct Dataset {
  lie::GroupKind kind;
  std::vector<lie::GroupElement> items;
  nlohmann::json meta = nlohmann::json::object();

  int size() const { return static_cast<int>(items.size()); }
};

// ---------------------------------------------------------------------------
// Bitmap masks (for maze-style torus densities)
// ---------------------------------------------------------------------------

/// A binary pixel grid, row-major, row 0 at the top (image convention).
struct MaskBitmap {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // nonzero = set (part of the support)

  bool at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * cols + c] != 0;
  }
  int set_count() const;
};

/// Plain-text PGM ("P2") loader.  '#' comments are allowed anywhere in the
/// header or data.  A pixel is set iff its value exceeds maxval/2 (bright
/// pixels carry the distribution's support).  Throws IoError on unreadable
/// files and ConfigError on malformed contents.
MaskBitmap load_mask_pgm(const std::string& path);

/// CSV mask loader.  First line "rows,cols"; each further line "r,c" marks a
/// set pixel (0-based, duplicates tolerated).  Throws ConfigError on
/// malformed or out-of-range entries.
MaskBitmap load_mask_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Uniform samples on the black cells ((i + j) even) of an m-by-m partition
/// of [0, 2pi)^2, as TorusPower(2) elements.  Requires m even and >= 2.
Dataset checkerboard_torus(int m, int n_samples, std::uint64_t seed);

/// Uniform samples over the set pixels of `mask`, jittered uniformly within
/// each pixel and mapped to [0, 2pi)^2 on TorusPower(2).  Pixel (r, c) covers
/// angle cell [2pi c / cols, 2pi (c+1) / cols) x [2pi (rows-1-r) / rows,
/// 2pi (rows-r) / rows): columns increase with the first angle, rows are
/// flipped so the image's top row sits at the top of an angle scatter plot.
/// Requires at least one set pixel.
Dataset maze_from_mask(const MaskBitmap& mask, int n_samples,
                       std::uint64_t seed);

/// Wrapped-Gaussian-style mixture on SO(n): component means R_j ~ Haar,
/// per-component concentration sigma_j ~ U(concentration_range); each sample
/// picks a component uniformly and returns R_j * exp(sigma_j * z) with z a
/// standard normal algebra coefficient vector.  Requires n >= 2,
/// components >= 1, and a nonnegative ordered concentration range.
Dataset so_n_mixture(int n, int components,
                     std::pair<double, double> concentration_range,
                     int n_samples, std::uint64_t seed);

/// H = Delta_h - V_h on n_grid periodic points x_i = -1 + 2i/n_grid over
/// [-1, 1) (central differences, spacing 2/n_grid), with the random
/// potential V_h = diag(omega^2 (x_i - x0)^2 / 2).  Real symmetric; the
/// Hermitian defect is exactly zero.
lie::Matrix oscillator_hamiltonian(int n_grid, double omega, double x0);

/// Open-chain transverse-field Ising Hamiltonian on `qubits` sites:
/// H = -sum_{i<qubits-1} J[i] sz_i sz_{i+1} - sum_i g[i] sx_i, assembled via
/// Kronecker products of Pauli matrices.  Requires J.size() == qubits - 1
/// and g.size() == qubits.  Real symmetric; Hermitian defect exactly zero.
lie::Matrix tfim_hamiltonian(int qubits, const std::vector<double>& J,
                             const std::vector<double>& g);

/// Time-evolution operators U = expm(-i H) of discretized quantum harmonic
/// oscillators with random potentials (oscillator_hamiltonian above); omega ~
/// U(omega_range) then x0 ~ U(x0_range) per sample, in that draw order.  The
/// exponential is computed from a full Hermitian eigendecomposition (cyclic
/// Jacobi).  Requires n_grid >= 2.
Dataset quantum_oscillator_un(int n_grid, int n_samples,
                              std::pair<double, double> omega_range,
                              std::pair<double, double> x0_range,
                              std::uint64_t seed);

/// Time-evolution operators U = expm(-i H) of random transverse-field Ising
/// chains (tfim_hamiltonian above) on `qubits` sites; per sample the draw
/// order is J_0..J_{qubits-2} ~ U(J_range) then g_0..g_{qubits-1} ~
/// U(g_range).  Elements of U(2^qubits).  Requires 1 <= qubits <= 4.
Dataset tfim_un(int qubits, std::pair<double, double> J_range,
                std::pair<double, double> g_range, int n_samples,
                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Torus angle I/O
// ---------------------------------------------------------------------------

/// Build a TorusPower(cols) dataset from rows of angles (radians, any reals;
/// wrapped to [0, 2pi)).
Dataset dataset_from_angles(const Eigen::MatrixXd& angles);

/// Extract the angle matrix (rows = items, cols = torus coordinates, values
/// in [0, 2pi)) from a torus-power dataset.  Throws ConfigError for kinds
/// with non-torus factors.
Eigen::MatrixXd dataset_angles(const Dataset& dataset);

/// Load a CSV of `dims` comma-separated angle columns (radians); each angle
/// is wrapped to [0, 2pi) and rows map to TorusPower(dims) elements in file
/// order.  Malformed rows and wrong column counts throw ConfigError naming
/// the 1-based data line.
Dataset load_angles_csv(const std::string& path, int dims);

/// Write the dataset's angles as bare CSV rows (17 significant digits, so a
/// load_angles_csv round trip preserves angles to full precision).
void save_angles_csv(const Dataset& dataset, const std::string& path);

// ---------------------------------------------------------------------------
// Splitting and serialization
// ---------------------------------------------------------------------------

/// Seeded Fisher-Yates shuffle followed by a deterministic cut: the first
/// floor(ratio * M) items form the train split, the remainder the test split.
/// Requires at least 10 items and ratio in (0, 1).
std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio,
                                  std::uint64_t seed);

/// JSON-lines file: a header object {"kind", "meta", "count"} followed by one
/// serialized element per line.
void save_jsonl(const Dataset& dataset, const std::string& path);

/// Inverse of save_jsonl; validates the header, the element count, and that
/// every element is on the group at 1e-8.
Dataset load_jsonl(const std::string& path);

// ---------------------------------------------------------------------------
// Generator dispatch (CLI entry point and meta reproduction)
// ---------------------------------------------------------------------------

/// Run a generator from a spec {"generator": name, "params": {...},
/// "seed": n} -- exactly the records generators place in Dataset::meta.
/// Unknown names throw ConfigError listing the valid generators.
Dataset generate(const nlohmann::json& genspec);

/// Names accepted by generate().
std::vector<std::string> generator_names();

// ---------------------------------------------------------------------------
// Hermitian eigensolver (exposed for reuse and direct testing)
// ---------------------------------------------------------------------------

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  lie::Matrix vectors;     // unitary; column k pairs with values[k]
};

/// Cyclic-by-row Jacobi eigendecomposition of a Hermitian matrix, iterated
/// until the off-diagonal Frobenius norm is <= off_tol.  Throws ConfigError
/// if `h` is not square or departs from Hermitian symmetry by more than
/// 1e-13 (relative) and NumericError if max_sweeps sweeps do not reach
/// off_tol.
HermitianEigen jacobi_hermitian(const lie::Matrix& h, double off_tol = 1e-12,
                                int max_sweeps = 60);

/// U = expm(-i H) for Hermitian H, via jacobi_hermitian.
lie::Matrix unitary_from_hamiltonian(const lie::Matrix& h);

}  // namespace liegen::data
