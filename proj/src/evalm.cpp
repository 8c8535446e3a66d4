// src/evalm.cpp

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

#include "liegen/evalm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "liegen/errors.hpp"
#include "liegen/rng.hpp"
#include "liegen/serialize.hpp"

namespace liegen::eval {

namespace {

constexpr std::uint64_t kMmdPermTag = 0x3A3D;
constexpr std::uint64_t kPairTag = 0x9A12;
constexpr double kTwoPi = 2.0 * lie::kPi;

Eigen::MatrixXd flatten_all(const data::Dataset& ds) {
  const int fd = lie::flat_dim(ds.kind);
  Eigen::MatrixXd flat(ds.size(), fd);
  for (int i = 0; i < ds.size(); ++i) {
    Eigen::RowVectorXd row(fd);
    lie::flatten_element(ds.items[static_cast<std::size_t>(i)], row);
    flat.row(i) = row;
  }
  return flat;
}

/// Marginal coordinate matrix: angles for torus powers, flattened entries
/// otherwise (see the header's coordinate convention).
Eigen::MatrixXd coordinate_matrix(const data::Dataset& ds) {
  if (ds.kind.is_abelian()) return data::dataset_angles(ds);
  return flatten_all(ds);
}

/// Pooled-Gram two-sample functional.  Given a pooled permutation `idx`
/// whose first m slots form sample A and the rest sample B, derives every
/// block sum from the A-block sum plus row sums:
///   S_AB = sum_{i in A} rowsum_i - S_AA,   S_BB = total - S_AA - 2 S_AB.
double mmd_statistic(const Eigen::MatrixXd& kernel,
                     const Eigen::VectorXd& rowsum, double total, int m, int n,
                     const std::vector<int>& idx, std::vector<int>& a_sorted) {
  double d_pair = 0.0;
  if (m == n)
    for (int k = 0; k < m; ++k)
      d_pair += kernel(idx[static_cast<std::size_t>(k)],
                       idx[static_cast<std::size_t>(m + k)]);

  a_sorted.assign(idx.begin(), idx.begin() + m);
  std::sort(a_sorted.begin(), a_sorted.end());
  double s_aa = 0.0;
  double r_a = 0.0;
  for (int i : a_sorted) {
    const double* row = kernel.data() + static_cast<std::ptrdiff_t>(i) *
                                            kernel.cols();
    double acc = 0.0;
    for (int j : a_sorted) acc += row[j];
    s_aa += acc;
    r_a += rowsum[i];
  }
  const double s_ab = r_a - s_aa;
  const double s_bb = total - s_aa - 2.0 * s_ab;

  if (m == n) {
    // Paired unbiased estimator; exactly zero for identical input arrays.
    return ((s_aa - m) + (s_bb - n) - 2.0 * (s_ab - d_pair)) /
           (static_cast<double>(m) * (m - 1));
  }
  return (s_aa - m) / (static_cast<double>(m) * (m - 1)) +
         (s_bb - n) / (static_cast<double>(n) * (n - 1)) -
         2.0 * s_ab / (static_cast<double>(m) * n);
}

/// Median pairwise distance over a pooled subsample of at most ~512 points
/// taken proportionally (and stride-deterministically) from both inputs, so
/// that swapping the arguments selects the same point multiset.
double median_heuristic(const Eigen::MatrixXd& flat, int m, int n) {
  const int total = m + n;
  auto pick = [&](int offset, int count) {
    const int cap = std::max(1, (512 * count) / total);
    const int stride = std::max(1, (count + cap - 1) / cap);
    std::vector<int> out;
    for (int i = 0; i < count; i += stride) out.push_back(offset + i);
    return out;
  };
  std::vector<int> sub = pick(0, m);
  const std::vector<int> sub_b = pick(m, n);
  sub.insert(sub.end(), sub_b.begin(), sub_b.end());

  std::vector<double> dist;
  dist.reserve(sub.size() * (sub.size() - 1) / 2);
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t j = i + 1; j < sub.size(); ++j)
      dist.push_back((flat.row(sub[i]) - flat.row(sub[j])).norm());
  if (dist.empty()) return 1.0;
  std::nth_element(dist.begin(), dist.begin() + dist.size() / 2, dist.end());
  const double med = dist[dist.size() / 2];
  return med > 1e-300 ? med : 1.0;
}

nlohmann::json histogram_to_json(const HistogramTable& h) {
  return {{"coordinate", h.coordinate},
          {"lo", h.lo},
          {"hi", h.hi},
          {"counts", h.counts}};
}

}  // namespace

MmdResult mmd2(const data::Dataset& a, const data::Dataset& b,
               const MmdConfig& cfg) {
  if (a.kind != b.kind)
    throw ConfigError("mmd2: kind mismatch (" + a.kind.tag() + " vs " +
                      b.kind.tag() + ")");
  if (a.size() < 2 || b.size() < 2)
    throw ConfigError("mmd2: both samples need at least 2 items");
  if (cfg.permutations < 0)
    throw ConfigError("mmd2: permutations must be nonnegative");
  if (std::isnan(cfg.bandwidth) ||
      (cfg.bandwidth > 0.0 && !std::isfinite(cfg.bandwidth)))
    throw ConfigError("mmd2: bandwidth must be finite");

  const int m = a.size();
  const int n = b.size();
  const int total_n = m + n;

  Eigen::MatrixXd flat(total_n, lie::flat_dim(a.kind));
  flat.topRows(m) = flatten_all(a);
  flat.bottomRows(n) = flatten_all(b);

  MmdResult result;
  result.bandwidth =
      cfg.bandwidth > 0.0 ? cfg.bandwidth : median_heuristic(flat, m, n);
  result.permutations = cfg.permutations;

  // Pooled Gram matrix of the Gaussian kernel.
  Eigen::MatrixXd kernel = flat * flat.transpose();
  const Eigen::VectorXd sq = kernel.diagonal();
  const double inv = 1.0 / (2.0 * result.bandwidth * result.bandwidth);
  for (int i = 0; i < total_n; ++i)
    for (int j = 0; j < total_n; ++j) {
      const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * kernel(i, j));
      kernel(i, j) = std::exp(-d2 * inv);
    }
  const Eigen::VectorXd rowsum = kernel.rowwise().sum();
  const double total = rowsum.sum();

  std::vector<int> idx(static_cast<std::size_t>(total_n));
  for (int i = 0; i < total_n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::vector<int> scratch;
  result.statistic =
      mmd_statistic(kernel, rowsum, total, m, n, idx, scratch);

  Rng rng = make_stream(cfg.seed, kMmdPermTag);
  int count_ge = 0;
  for (int p = 0; p < cfg.permutations; ++p) {
    for (int i = total_n - 1; i > 0; --i) {
      const int j =
          static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[static_cast<std::size_t>(i)],
                idx[static_cast<std::size_t>(j)]);
    }
    const double stat =
        mmd_statistic(kernel, rowsum, total, m, n, idx, scratch);
    if (stat >= result.statistic) ++count_ge;
  }
  result.p_value = (1.0 + count_ge) / (1.0 + cfg.permutations);
  return result;
}

ManifoldReport manifold_report(const data::Dataset& dataset) {
  ManifoldReport report;
  if (dataset.items.empty()) return report;
  double sum = 0.0;
  for (const lie::GroupElement& g : dataset.items) {
    const double defect = lie::unitarity_defect(g);
    report.max_defect = std::max(report.max_defect, defect);
    sum += defect;
  }
  report.mean_defect = sum / dataset.size();
  return report;
}

std::vector<std::pair<int, int>> random_coordinate_pairs(
    const lie::GroupKind& kind, int count, std::uint64_t seed) {
  if (count < 0) throw ConfigError("coordinate pair count must be nonnegative");
  const int dim =
      kind.is_abelian() ? kind.torus_coordinates() : lie::flat_dim(kind);
  Rng rng = make_stream(seed, kPairTag);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(dim));
    int j = i;
    if (dim > 1)
      while (j == i)
        j = static_cast<int>(rng() % static_cast<std::uint64_t>(dim));
    pairs.emplace_back(i, j);
  }
  return pairs;
}

void marginals_export(const data::Dataset& dataset,
                      const std::vector<std::pair<int, int>>& dims,
                      const std::string& path) {
  const Eigen::MatrixXd coords = coordinate_matrix(dataset);
  for (const auto& [i, j] : dims)
    if (i < 0 || j < 0 || i >= coords.cols() || j >= coords.cols())
      throw ConfigError("marginals_export: coordinate index out of range (" +
                        std::to_string(i) + ", " + std::to_string(j) +
                        ") for dimension " + std::to_string(coords.cols()));

  std::ostringstream out;
  out << std::setprecision(10);
  out << "#";
  for (std::size_t k = 0; k < dims.size(); ++k)
    out << (k ? "," : " ") << "d" << dims[k].first << ",d" << dims[k].second;
  out << "\n";
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (k) out << ',';
      out << coords(r, dims[k].first) << ',' << coords(r, dims[k].second);
    }
    out << '\n';
  }
  serialize::write_text_file(path, out.str());
}

std::vector<HistogramTable> marginal_histograms(const data::Dataset& dataset,
                                                int bins) {
  if (bins < 1) throw ConfigError("histogram bins must be >= 1");
  const Eigen::MatrixXd coords = coordinate_matrix(dataset);
  const bool angular = dataset.kind.is_abelian();
  std::vector<HistogramTable> tables;
  tables.reserve(static_cast<std::size_t>(coords.cols()));
  for (Eigen::Index c = 0; c < coords.cols(); ++c) {
    HistogramTable table;
    table.coordinate = static_cast<int>(c);
    table.lo = angular ? 0.0 : -1.0;
    table.hi = angular ? kTwoPi : 1.0;
    table.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = (table.hi - table.lo) / bins;
    for (Eigen::Index r = 0; r < coords.rows(); ++r) {
      const int bin = std::clamp(
          static_cast<int>((coords(r, c) - table.lo) / width), 0, bins - 1);
      ++table.counts[static_cast<std::size_t>(bin)];
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

EvalReport evaluate(const data::Dataset& generated,
                    const data::Dataset& reference, const MmdConfig& cfg,
                    int bins) {
  EvalReport report = evaluate(generated, bins);
  report.mmd = mmd2(generated, reference, cfg);
  report.has_mmd = true;
  return report;
}

EvalReport evaluate(const data::Dataset& generated, int bins) {
  EvalReport report;
  report.manifold = manifold_report(generated);
  report.histograms = marginal_histograms(generated, bins);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j = {
      {"manifold",
       {{"max_defect", report.manifold.max_defect},
        {"mean_defect", report.manifold.mean_defect}}},
  };
  nlohmann::json hists = nlohmann::json::array();
  for (const HistogramTable& h : report.histograms)
    hists.push_back(histogram_to_json(h));
  j["histograms"] = std::move(hists);
  if (report.has_mmd) {
    j["mmd"] = {{"statistic", report.mmd.statistic},
                {"p_value", report.mmd.p_value},
                {"bandwidth", report.mmd.bandwidth},
                {"permutations", report.mmd.permutations}};
  }
  if (report.has_nll) {
    j["nll"] = {{"mean", report.nll_estimate.nll},
                {"se", report.nll_estimate.se},
                {"S", report.nll_estimate.xi_samples},
                {"N", static_cast<int>(report.nll_estimate.per_datum.size())},
                {"kind", report.nll_estimate.kind.tag()},
                {"haar_normalized", report.nll_estimate.haar_normalized}};
  }
  return j;
}

void save_report(const EvalReport& report, const std::string& path) {
  serialize::write_text_file(path, report_to_json(report).dump(2) + "\n");
}

}  // namespace liegen::eval
