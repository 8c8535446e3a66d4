// src/likelihood.cpp

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

#include "liegen/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liegen/errors.hpp"
#include "liegen/serialize.hpp"

namespace liegen::nll {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kFixedPointTol = 1e-13;
constexpr int kFixedPointMaxIter = 50;
constexpr double kManifoldTol = 1e-4;

/// Largest full grid step not exceeding horizon_T - eps_early_stop (the
/// generation run's early-stop count; the inversion assigns data the same
/// final index so the two transports are exact mutual inverses).
int grid_steps(const dyn::DiffusionConfig& cfg) {
  const int n = static_cast<int>(std::floor(
      (cfg.horizon_T - cfg.eps_early_stop) / cfg.h() + 1e-12));
  return std::min(n, cfg.steps_N);
}

void check_manifold(const dyn::StateBatch& states, const char* where) {
  for (const auto& g : states.g) {
    const double defect = lie::unitarity_defect(states.kind, g);
    if (!(defect <= kManifoldTol))
      throw NumericError(std::string(where) +
                         ": manifold violation " + std::to_string(defect) +
                         " exceeds 1e-4");
  }
}

/// Log N(xi; 0, I) row-wise.
Eigen::VectorXd momentum_logpdf(const Eigen::MatrixXd& xi) {
  return (-0.5 * xi.rowwise().squaredNorm().array() -
          0.5 * kLog2Pi * xi.cols())
      .matrix();
}

}  // namespace

Eigen::VectorXd backward_drift_divergence(const dyn::ScoreField& field,
                                          const dyn::StateBatch& states,
                                          const Eigen::VectorXd& t,
                                          double gamma) {
  if (gamma <= 0.0)
    throw ConfigError("backward_drift_divergence: gamma must be > 0");
  const int d = states.kind.algebra_dim();
  return gamma * (field.divergence(states, t).array() + d).matrix();
}

double divergence_of_backward_drift(const dyn::ScoreField& field,
                                    const lie::GroupElement& g,
                                    const Eigen::VectorXd& xi, double t,
                                    double gamma) {
  dyn::StateBatch one{g.kind, {g.mat}, xi.transpose()};
  return backward_drift_divergence(field, one,
                                   Eigen::VectorXd::Constant(1, t),
                                   gamma)[0];
}

EncodeResult encode_to_noise(const dyn::ScoreField& field,
                             const dyn::StateBatch& data,
                             const dyn::DiffusionConfig& cfg) {
  cfg.validate();
  if (data.kind != cfg.kind)
    throw ConfigError("encode_to_noise: batch kind does not match config");
  check_manifold(data, "encode_to_noise");

  const int batch = data.size();
  const int d = cfg.kind.algebra_dim();
  const double h = cfg.h();
  const double amp = std::exp(cfg.gamma * h);
  const int n_steps = grid_steps(cfg);

  EncodeResult result;
  result.end_states = data;
  result.delta_logp = Eigen::VectorXd::Zero(batch);
  result.ode_steps = n_steps;
  if (batch == 0) return result;

  dyn::StateBatch& states = result.end_states;
  for (int n = n_steps - 1; n >= 0; --n) {
    const double t = n * h;
    const Eigen::VectorXd tv = Eigen::VectorXd::Constant(batch, t);

    // Undo the geodesic sub-flow: the stored momentum is the one that moved g.
    for (int i = 0; i < batch; ++i)
      lie::right_multiply_exp(states.kind, states.g[i],
                              states.xi.row(i).transpose(), h);

    // Invert the momentum sub-flow.  The score is evaluated at the left
    // endpoint, which is the unknown, so iterate to the fixed point.  Each
    // row freezes once its own update falls below tolerance, which keeps a
    // row's iterate sequence independent of what else shares the batch.
    const Eigen::MatrixXd xi_right = states.xi;
    std::vector<char> active(batch, 1);
    int remaining = batch;
    for (int sweep = 0; sweep < kFixedPointMaxIter && remaining > 0;
         ++sweep) {
      const Eigen::MatrixXd s = field.score(states, tv);
      if (!s.allFinite())
        throw NumericError("encode_to_noise: non-finite score at t = " +
                           std::to_string(t));
      for (int i = 0; i < batch; ++i) {
        if (!active[i]) continue;
        const Eigen::RowVectorXd next =
            (xi_right.row(i) - (amp - 1.0) * s.row(i)) / amp;
        const double move = (next - states.xi.row(i)).cwiseAbs().maxCoeff();
        states.xi.row(i) = next;
        if (move < kFixedPointTol) {
          active[i] = 0;
          --remaining;
        }
      }
    }
    if (remaining > 0)
      throw NumericError(
          "encode_to_noise: momentum fixed point did not converge at t = " +
          std::to_string(t));

    result.delta_logp.array() -=
        h * cfg.gamma *
        (field.divergence(states, tv).array() + static_cast<double>(d));

    if (cfg.reorth_every > 0 && (n_steps - n) % cfg.reorth_every == 0)
      check_manifold(states, "encode_to_noise");
  }
  if (!states.xi.allFinite() || !result.delta_logp.allFinite())
    throw NumericError("encode_to_noise: non-finite state after transport");
  return result;
}

Eigen::VectorXd log_prior(const dyn::StateBatch& states) {
  const int k = states.kind.torus_coordinates();
  return (momentum_logpdf(states.xi).array() - k * kLog2Pi).matrix();
}

Eigen::VectorXd joint_logp_batch(const dyn::ScoreField& field,
                                 const dyn::StateBatch& data,
                                 const dyn::DiffusionConfig& cfg) {
  const EncodeResult enc = encode_to_noise(field, data, cfg);
  return log_prior(enc.end_states) + enc.delta_logp;
}

double joint_logp(const dyn::ScoreField& field, const lie::GroupElement& g,
                  const Eigen::VectorXd& xi,
                  const dyn::DiffusionConfig& cfg) {
  dyn::StateBatch one{g.kind, {g.mat}, xi.transpose()};
  return joint_logp_batch(field, one, cfg)[0];
}

NllEstimate nll(const dyn::ScoreField& field,
                const std::vector<lie::GroupElement>& test_set,
                const NllConfig& cfg) {
  cfg.dynamics.validate();
  if (cfg.xi_samples < 1)
    throw ConfigError("nll: xi_samples must be >= 1");
  if (cfg.max_batch < 1) throw ConfigError("nll: max_batch must be >= 1");
  if (test_set.empty()) throw ConfigError("nll: empty test set");

  const int n = static_cast<int>(test_set.size());
  const int s_count = cfg.xi_samples;
  const int d = cfg.dynamics.kind.algebra_dim();
  for (const auto& g : test_set)
    if (g.kind != cfg.dynamics.kind)
      throw ConfigError("nll: datum kind does not match config");

  // All momentum draws up front, datum-major, so chunking cannot change
  // the estimate.
  Rng rng = make_stream(cfg.seed, 0xE11);
  Eigen::MatrixXd xi_all(static_cast<Eigen::Index>(n) * s_count, d);
  fill_gaussian(rng, xi_all);

  Eigen::VectorXd log_weights(n * s_count);
  int ode_steps = 0;
  for (int begin = 0; begin < n * s_count; begin += cfg.max_batch) {
    const int end = std::min(begin + cfg.max_batch, n * s_count);
    dyn::StateBatch chunk;
    chunk.kind = cfg.dynamics.kind;
    chunk.g.reserve(end - begin);
    chunk.xi = xi_all.middleRows(begin, end - begin);
    for (int row = begin; row < end; ++row)
      chunk.g.push_back(test_set[row / s_count].mat);

    const EncodeResult enc = encode_to_noise(field, chunk, cfg.dynamics);
    ode_steps = enc.ode_steps;
    log_weights.segment(begin, end - begin) =
        log_prior(enc.end_states) + enc.delta_logp -
        momentum_logpdf(chunk.xi);
  }

  NllEstimate est;
  est.kind = cfg.dynamics.kind;
  est.xi_samples = s_count;
  est.ode_steps = ode_steps;
  est.haar_normalized = !cfg.dynamics.kind.is_abelian();
  est.per_datum.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd lw = log_weights.segment(i * s_count, s_count);
    const double m = lw.maxCoeff();
    est.per_datum[i] =
        m + std::log((lw.array() - m).exp().mean());
  }
  est.nll = -est.per_datum.mean();
  if (n > 1) {
    const double var =
        (est.per_datum.array() - est.per_datum.mean()).square().sum() /
        (n - 1);
    est.se = std::sqrt(var / n);
  }
  if (!std::isfinite(est.nll))
    throw NumericError("nll: estimate is not finite");
  return est;
}

void save_nll_report(const std::string& path, const NllEstimate& estimate) {
  nlohmann::json j;
  j["mean"] = estimate.nll;
  j["se"] = estimate.se;
  j["S"] = estimate.xi_samples;
  j["N"] = estimate.ode_steps;
  j["kind"] = estimate.kind.tag();
  j["haar_normalized"] = estimate.haar_normalized;
  serialize::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace liegen::nll
