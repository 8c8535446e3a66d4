// liegen/evalm.hpp

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
// Sample-quality diagnostics: manifold-error reports, marginal histograms
// and scatter exports, a kernel two-sample statistic with a permutation
// test, and report plumbing.
//
// Coordinate convention shared by the marginal utilities: for torus-power
// kinds a "coordinate" is a block angle in [0, 2pi); for every other kind it
// indexes the flattened matrix layout of lie::flatten_element (row-major
// entries; complex kinds emit re/im pairs, so coordinate 2e is the real part
// and 2e+1 the imaginary part of entry e).

#pragma once

#include <json.hpp>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liegen/datasets.hpp"
#include "liegen/lie.hpp"
#include "liegen/likelihood.hpp"

namespace liegen::eval {

// ---------------------------------------------------------------------------
// Kernel two-sample statistic
// ---------------------------------------------------------------------------

struct MmdConfig {
  /// Gaussian kernel bandwidth; <= 0 selects the median heuristic (median
  /// pairwise distance over a deterministic pooled subsample of at most 512
  /// points, chosen proportionally from both inputs so the choice is
  /// symmetric in the arguments).
  double bandwidth = 0.0;
  int permutations = 200;
  std::uint64_t seed = 0;
};

struct MmdResult {
  double statistic = 0.0;  ///< unbiased MMD^2 estimate
  double p_value = 1.0;    ///< permutation p-value, (1 + #{>= obs}) / (1 + P)
  double bandwidth = 0.0;  ///< bandwidth actually used
  int permutations = 0;
};

/// Unbiased MMD^2 between two samples of the same kind, with the Gaussian
/// kernel k(x, y) = exp(-||x - y||^2 / (2 bw^2)) on flattened matrix
/// entries, plus a permutation test that reuses the pooled Gram matrix.
/// Equal-size inputs use the paired unbiased estimator
///   sum_{i != j} [k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i)]
///   / (m (m - 1)),
/// which is exactly zero when the inputs are identical arrays; unequal sizes
/// fall back to the generic unbiased U-statistic.  Throws ConfigError on a
/// kind mismatch or an input with fewer than 2 items.
MmdResult mmd2(const data::Dataset& a, const data::Dataset& b,
               const MmdConfig& cfg = {});

// ---------------------------------------------------------------------------
// Manifold diagnostics
// ---------------------------------------------------------------------------

struct ManifoldReport {
  double max_defect = 0.0;   ///< max over items of ||g^H g - I||_F
  double mean_defect = 0.0;  ///< mean of the same
};

ManifoldReport manifold_report(const data::Dataset& dataset);

// ---------------------------------------------------------------------------
// Marginals
// ---------------------------------------------------------------------------

/// `count` coordinate pairs drawn with a seeded stream (distinct coordinates
/// within a pair whenever the kind has more than one); deterministic given
/// (kind, count, seed).
std::vector<std::pair<int, int>> random_coordinate_pairs(
    const lie::GroupKind& kind, int count, std::uint64_t seed);

/// Scatter-ready CSV: a '#'-prefixed header naming the selected coordinates,
/// then one row per item with two columns per requested pair.  Torus kinds
/// export block angles in [0, 2pi); other kinds export flattened entries.
/// Throws ConfigError if any index is out of range.
void marginals_export(const data::Dataset& dataset,
                      const std::vector<std::pair<int, int>>& dims,
                      const std::string& path);

struct HistogramTable {
  int coordinate = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;  ///< `bins` equal-width bins over [lo, hi]
};

/// One histogram per coordinate: torus kinds bin angles over [0, 2pi), other
/// kinds bin flattened entries over [-1, 1] (compact-group entries cannot
/// leave it; values on the boundary land in the edge bins).
std::vector<HistogramTable> marginal_histograms(const data::Dataset& dataset,
                                                int bins = 24);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalReport {
  ManifoldReport manifold;
  std::vector<HistogramTable> histograms;
  bool has_mmd = false;
  MmdResult mmd;
  bool has_nll = false;
  nll::NllEstimate nll_estimate;  ///< meaningful iff has_nll
};

/// Manifold report and histograms of `generated`, plus MMD^2 against
/// `reference`.  Kinds must match.
EvalReport evaluate(const data::Dataset& generated,
                    const data::Dataset& reference, const MmdConfig& cfg = {},
                    int bins = 24);

/// Manifold report and histograms only (no reference sample).
EvalReport evaluate(const data::Dataset& generated, int bins = 24);

nlohmann::json report_to_json(const EvalReport& report);

void save_report(const EvalReport& report, const std::string& path);

}  // namespace liegen::eval
