// src/dynamics.cpp

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

#include "liegen/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "liegen/errors.hpp"
#include "liegen/serialize.hpp"

namespace liegen::dyn {

namespace {

void check_finite_state(const lie::Matrix& g, const Eigen::Ref<const Eigen::RowVectorXd>& xi) {
  if (!g.allFinite() || !xi.allFinite())
    throw NumericError("dynamics: non-finite state");
}

}  // namespace

void DiffusionConfig::validate() const {
  if (gamma <= 0.0) throw ConfigError("DiffusionConfig: gamma must be > 0");
  if (horizon_T <= 0.0)
    throw ConfigError("DiffusionConfig: horizon_T must be > 0");
  if (steps_N <= 0) throw ConfigError("DiffusionConfig: steps_N must be > 0");
  if (eps_early_stop <= 0.0 || eps_early_stop >= horizon_T)
    throw ConfigError(
        "DiffusionConfig: eps_early_stop must lie in (0, horizon_T)");
  if (reorth_every < 0)
    throw ConfigError("DiffusionConfig: reorth_every must be >= 0");
}

PhaseState StateBatch::state(int i) const {
  return PhaseState{lie::GroupElement{kind, g[i]},
                    lie::AlgebraVector{kind, xi.row(i).transpose()}};
}

// ---------------------------------------------------------------------------
// Score field default divergence (central differences)
// ---------------------------------------------------------------------------

Eigen::VectorXd ScoreField::divergence(const StateBatch& states,
                                       const Eigen::VectorXd& t) const {
  const int d = states.kind.algebra_dim();
  const double fd_h = 1e-5;
  Eigen::VectorXd div = Eigen::VectorXd::Zero(states.size());
  StateBatch shifted = states;
  for (int i = 0; i < d; ++i) {
    shifted.xi = states.xi;
    shifted.xi.col(i).array() += fd_h;
    const Eigen::VectorXd up = score(shifted, t).col(i);
    shifted.xi.col(i).array() -= 2.0 * fd_h;
    const Eigen::VectorXd dn = score(shifted, t).col(i);
    div += (up - dn) / (2.0 * fd_h);
  }
  return div;
}

// ---------------------------------------------------------------------------
// Single-chain steps (delegate to the batched kernels on a batch of one)
// ---------------------------------------------------------------------------

PhaseState fosi_step_with_noise(const PhaseState& state,
                                const DiffusionConfig& cfg, double h,
                                const lie::Vector& eps) {
  if (h <= 0.0) throw ConfigError("fosi_step: h must be > 0");
  check_finite_state(state.g.mat, state.xi.coeffs.transpose());
  PhaseState out = state;
  const double decay = std::exp(-cfg.gamma * h);
  out.xi.coeffs = decay * state.xi.coeffs + eps;
  lie::right_multiply_exp(out.g, out.xi.coeffs, h);
  return out;
}

PhaseState fosi_step(const PhaseState& state, const DiffusionConfig& cfg,
                     double h, Rng& rng) {
  const double noise_std = std::sqrt(1.0 - std::exp(-2.0 * cfg.gamma * h));
  lie::Vector eps(state.xi.coeffs.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i)
    eps[i] = noise_std * gaussian(rng);
  return fosi_step_with_noise(state, cfg, h, eps);
}

Trajectory fosi_trajectory(const PhaseState& init, const DiffusionConfig& cfg,
                           Rng& rng) {
  if (cfg.steps_N == 0) return Trajectory{{init}, {0.0}};
  cfg.validate();
  const double h = cfg.h();
  Trajectory traj;
  traj.states.reserve(cfg.steps_N + 1);
  traj.times.reserve(cfg.steps_N + 1);
  traj.states.push_back(init);
  traj.times.push_back(0.0);
  PhaseState cur = init;
  for (int n = 1; n <= cfg.steps_N; ++n) {
    cur = fosi_step(cur, cfg, h, rng);
    if (cfg.reorth_every > 0 && n % cfg.reorth_every == 0)
      lie::reorthonormalize(cur.g);
    traj.states.push_back(cur);
    traj.times.push_back(n * h);
  }
  return traj;
}

PhaseState bsoi_step_with_noise(const PhaseState& state,
                                const ScoreField& score, double t,
                                const DiffusionConfig& cfg, double h,
                                const lie::Vector& eps) {
  StateBatch sb{state.g.kind, {state.g.mat}, state.xi.coeffs.transpose()};
  const Eigen::VectorXd tv = Eigen::VectorXd::Constant(1, t);
  const Eigen::MatrixXd s = score.score(sb, tv);
  if (!s.allFinite())
    throw NumericError("bsoi_step: non-finite score at t = " +
                       std::to_string(t));
  const double amp = std::exp(cfg.gamma * h);
  PhaseState out = state;
  out.xi.coeffs =
      amp * state.xi.coeffs + 2.0 * (amp - 1.0) * s.row(0).transpose() + eps;
  lie::right_multiply_exp(out.g, out.xi.coeffs, -h);
  return out;
}

PhaseState bsoi_step(const PhaseState& state, const ScoreField& score,
                     double t, const DiffusionConfig& cfg, double h,
                     Rng& rng) {
  const double noise_std = std::sqrt(std::exp(2.0 * cfg.gamma * h) - 1.0);
  lie::Vector eps(state.xi.coeffs.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i)
    eps[i] = noise_std * gaussian(rng);
  return bsoi_step_with_noise(state, score, t, cfg, h, eps);
}

PhaseState pfode_step(const PhaseState& state, const ScoreField& score,
                      double t, const DiffusionConfig& cfg, double h) {
  StateBatch sb{state.g.kind, {state.g.mat}, state.xi.coeffs.transpose()};
  const Eigen::VectorXd tv = Eigen::VectorXd::Constant(1, t);
  const Eigen::MatrixXd s = score.score(sb, tv);
  if (!s.allFinite())
    throw NumericError("pfode_step: non-finite score at t = " +
                       std::to_string(t));
  const double amp = std::exp(cfg.gamma * h);
  PhaseState out = state;
  out.xi.coeffs = amp * state.xi.coeffs + (amp - 1.0) * s.row(0).transpose();
  lie::right_multiply_exp(out.g, out.xi.coeffs, -h);
  return out;
}

PhaseState sample_prior(const DiffusionConfig& cfg, Rng& rng) {
  PhaseState out{lie::haar_sample(cfg.kind, rng),
                 lie::AlgebraVector::zero(cfg.kind)};
  for (Eigen::Index i = 0; i < out.xi.coeffs.size(); ++i)
    out.xi.coeffs[i] = gaussian(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Batched ensemble operations
// ---------------------------------------------------------------------------

StateBatch sample_prior_batch(const lie::GroupKind& kind, int batch,
                              Rng& rng) {
  if (batch <= 0) throw ConfigError("sample_prior_batch: batch must be > 0");
  StateBatch sb{kind, {}, Eigen::MatrixXd(batch, kind.algebra_dim())};
  sb.g.reserve(batch);
  for (int i = 0; i < batch; ++i) sb.g.push_back(lie::haar_sample(kind, rng).mat);
  fill_gaussian(rng, sb.xi);
  return sb;
}

void fosi_step_batch(StateBatch& states, double gamma, double h, Rng& rng) {
  const double decay = std::exp(-gamma * h);
  const double noise_std = std::sqrt(1.0 - std::exp(-2.0 * gamma * h));
  Eigen::MatrixXd eps(states.xi.rows(), states.xi.cols());
  fill_gaussian(rng, eps);
  states.xi = decay * states.xi + noise_std * eps;
  for (int i = 0; i < states.size(); ++i)
    lie::right_multiply_exp(states.kind, states.g[i],
                            states.xi.row(i).transpose(), h);
}

std::vector<StateBatch> fosi_trajectory_batch(const StateBatch& init,
                                              const DiffusionConfig& cfg,
                                              Rng& rng) {
  if (cfg.steps_N == 0) return {init};
  cfg.validate();
  const double h = cfg.h();
  std::vector<StateBatch> out;
  out.reserve(cfg.steps_N + 1);
  out.push_back(init);
  StateBatch cur = init;
  for (int n = 1; n <= cfg.steps_N; ++n) {
    fosi_step_batch(cur, cfg.gamma, h, rng);
    if (cfg.reorth_every > 0 && n % cfg.reorth_every == 0)
      for (auto& g : cur.g) lie::reorthonormalize(cur.kind, g);
    out.push_back(cur);
  }
  return out;
}

void bsoi_step_batch(StateBatch& states, const Eigen::MatrixXd& s,
                     double gamma, double h, Rng& rng) {
  const double amp = std::exp(gamma * h);
  const double noise_std = std::sqrt(std::exp(2.0 * gamma * h) - 1.0);
  Eigen::MatrixXd eps(states.xi.rows(), states.xi.cols());
  fill_gaussian(rng, eps);
  states.xi = amp * states.xi + 2.0 * (amp - 1.0) * s + noise_std * eps;
  for (int i = 0; i < states.size(); ++i)
    lie::right_multiply_exp(states.kind, states.g[i],
                            states.xi.row(i).transpose(), -h);
}

void pfode_step_batch(StateBatch& states, const Eigen::MatrixXd& s,
                      double gamma, double h) {
  const double amp = std::exp(gamma * h);
  states.xi = amp * states.xi + (amp - 1.0) * s;
  for (int i = 0; i < states.size(); ++i)
    lie::right_multiply_exp(states.kind, states.g[i],
                            states.xi.row(i).transpose(), -h);
}

StateBatch sample_backward(const ScoreField& score, const DiffusionConfig& cfg,
                           int batch, Rng& rng, bool probability_flow,
                           bool early_stop) {
  cfg.validate();
  const double h = cfg.h();
  int n_steps = cfg.steps_N;
  if (early_stop) {
    n_steps = static_cast<int>(
        std::floor((cfg.horizon_T - cfg.eps_early_stop) / h + 1e-12));
    n_steps = std::min(n_steps, cfg.steps_N);
  }
  StateBatch sb = sample_prior_batch(cfg.kind, batch, rng);
  for (int n = 0; n < n_steps; ++n) {
    const double t = n * h;
    const Eigen::VectorXd tv = Eigen::VectorXd::Constant(batch, t);
    const Eigen::MatrixXd s = score.score(sb, tv);
    if (!s.allFinite())
      throw NumericError("sample_backward: non-finite score at t = " +
                         std::to_string(t));
    if (probability_flow)
      pfode_step_batch(sb, s, cfg.gamma, h);
    else
      bsoi_step_batch(sb, s, cfg.gamma, h, rng);
    if (cfg.reorth_every > 0 && (n + 1) % cfg.reorth_every == 0)
      for (auto& g : sb.g) lie::reorthonormalize(sb.kind, g);
  }
  return sb;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::ostringstream os;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    nlohmann::json line;
    line["t"] = traj.times[i];
    line["g"] = serialize::element_to_json(traj.states[i].g);
    line["xi"] = serialize::algebra_to_json(traj.states[i].xi);
    os << line.dump() << '\n';
  }
  return os.str();
}

}  // namespace liegen::dyn
