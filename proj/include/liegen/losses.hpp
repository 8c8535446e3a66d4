// include/liegen/losses.hpp

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

/// \file
/// Training objectives for the momentum score field.
///
/// Two interchangeable estimators of the same score-matching objective:
///
///   - Denoising (DSM), for torus powers only: the forward transition from a
///     data point has a closed form -- the momentum is an
///     Ornstein-Uhlenbeck bridge and the accumulated displacement is
///     conditionally a wrapped Gaussian on each circle -- so the regression
///     target is the conditional momentum score, computable per sample.
///
///   - Implicit (ISM), for every kind: states are drawn by simulating the
///     forward dynamics, and the objective mean ||s||^2 + 2 div_xi s needs
///     no target.  The divergence is exact (stacked unit tangents) in low
///     algebra dimension and a Rademacher estimate otherwise.
///
/// Both estimators differ from the true objective by a constant independent
/// of the parameters.  Networks are always queried at the backward clock
/// tau = horizon_T - (forward time), matching the samplers.

#ifndef LIEGEN_LOSSES_HPP_
#define LIEGEN_LOSSES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liegen/dynamics.hpp"
#include "liegen/lie.hpp"
#include "liegen/rng.hpp"
#include "liegen/score_net.hpp"

namespace liegen::loss {

// ---------------------------------------------------------------------------
// Wrapped normal
// ---------------------------------------------------------------------------

/// Log-density of the wrapped normal WN(theta; mean, var) on the circle,
/// 2 pi periodic in theta and mean.  The lattice sum runs over
/// k in [-K, K] with K = max(5, ceil(5 sqrt(var) / (2 pi))), evaluated by
/// log-sum-exp after reducing theta - mean to [-pi, pi).  var must be > 0.
double wn_logpdf(double theta, double mean, double var);

// ---------------------------------------------------------------------------
// Conditional forward transition (torus closed form)
// ---------------------------------------------------------------------------

/// Moments of the forward transition over time t at friction gamma, for one
/// orthonormal algebra coordinate:
///
///   xi_t | xi_0          ~  N(decay * xi_0, var_xi)
///   y    | xi_t, xi_0    ~  N(mu_g_coeff * (xi_t + xi_0), var_g)
///
/// where y is the accumulated displacement coefficient (before wrapping).
struct ConditionalTransition {
  double decay;       ///< exp(-gamma t)
  double var_xi;      ///< 1 - exp(-2 gamma t)
  double mu_g_coeff;  ///< (1 - e^{-gamma t}) / ((1 + e^{-gamma t}) gamma)
  double var_g;       ///< displacement variance given both momenta
};

/// Throws ConfigError unless t > 0 and gamma > 0.
ConditionalTransition conditional_params(double t, double gamma = 1.0);

// ---------------------------------------------------------------------------
// Denoising pairs
// ---------------------------------------------------------------------------

/// One forward draw from a data point: (g_t, xi_t) plus the regression
/// target, the gradient in xi_t of the log transition density given
/// (g_0, xi_0).  Coefficients are all in the orthonormal-basis units.
struct DsmDraw {
  lie::GroupElement g_t;
  Eigen::VectorXd xi0, xi_t, target;
};

/// Samples the closed-form transition. Torus powers only (ConfigError
/// otherwise); requires t > 0.
DsmDraw dsm_sample(const lie::GroupElement& g0, double t, double gamma,
                   Rng& rng);

/// The conditional momentum score at (g_t, xi_t):
/// grad_{xi_t} [ log p(xi_t | xi_0) + log p(g_t | xi_t, xi_0, g_0) ].
/// The displacement factor is a wrapped normal whose mean depends on xi_t,
/// so each coordinate combines the posterior-weighted lattice pull with the
/// Gaussian momentum term.
Eigen::VectorXd dsm_target(const lie::GroupElement& g0,
                           const lie::GroupElement& g_t,
                           const Eigen::VectorXd& xi0,
                           const Eigen::VectorXd& xi_t, double t,
                           double gamma);

/// A ready-to-train minibatch: noised states, network clocks tau = T - t,
/// and the per-sample targets.
struct DsmBatch {
  dyn::StateBatch states;
  Eigen::VectorXd tau;
  Eigen::MatrixXd target;
};

struct DsmConfig {
  double horizon_T = 10.0;
  double gamma = 1.0;
  double t_floor_frac = 1e-3;  ///< t ~ U[frac * T, T]
};

/// Draws `batch` training pairs, each from a uniformly chosen data element.
DsmBatch make_dsm_batch(const std::vector<lie::GroupElement>& data, int batch,
                        const DsmConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Loss values
// ---------------------------------------------------------------------------

struct LossValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// (1/B) sum_i ||s_i - target_i||^2; exactly zero when they coincide.
double mean_squared_residual(const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& target);

/// Denoising loss and its parameter gradient on a frozen minibatch.
LossValue dsm_loss(const net::ScoreModel& model, const DsmBatch& batch);

/// (1/B) sum_i [ ||s_i||^2 + 2 div_i ] for any score field (used to check
/// analytic stubs against the network estimators).
double ism_objective(const dyn::ScoreField& field,
                     const dyn::StateBatch& states, const Eigen::VectorXd& t);

/// Implicit loss with the exact stacked-unit divergence.
LossValue ism_loss_exact(const net::ScoreModel& model,
                         const dyn::StateBatch& states,
                         const Eigen::VectorXd& tau);

/// Implicit loss with a frozen Rademacher probe stack (q*B x d).
LossValue ism_loss_hutchinson(const net::ScoreModel& model,
                              const dyn::StateBatch& states,
                              const Eigen::VectorXd& tau,
                              const Eigen::MatrixXd& probes);

struct IsmConfig {
  int exact_threshold = 16;  ///< exact divergence when algebra_dim <= this
  int probes = 32;           ///< Rademacher probes otherwise
};

/// Dispatches on the algebra dimension, drawing probes from `rng` if needed.
LossValue ism_loss(const net::ScoreModel& model, const dyn::StateBatch& states,
                   const Eigen::VectorXd& tau, const IsmConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

enum class LossKind { kAuto, kDsm, kIsm };

struct TrainConfig {
  explicit TrainConfig(lie::GroupKind k) : kind(std::move(k)) {}

  lie::GroupKind kind;
  int hidden_dim = 0;  ///< 0 = auto: 256 when algebra_dim <= 10, else 512
  int depth = 3;
  long iters = 1000;
  int batch = 256;
  double base_lr = 5e-4;
  double weight_decay = 0.0;
  double gamma = 1.0;
  double horizon_T = 10.0;
  int steps_N = 500;  ///< forward grid for the implicit-loss state pool
  LossKind loss = LossKind::kAuto;
  double dsm_t_floor_frac = 1e-3;
  IsmConfig ism;
  std::uint64_t seed = 0;
  std::string out_dir;        ///< empty: keep everything in memory
  long checkpoint_every = 0;  ///< extra periodic checkpoints when > 0
  long log_every = 50;        ///< loss-CSV cadence

  int resolved_hidden_dim() const;
  /// kAuto picks the denoising loss exactly for torus powers.
  LossKind resolved_loss() const;
};

struct TrainResult {
  net::ScoreModel model;
  net::OptimizerState opt;
  LossKind used_loss = LossKind::kAuto;
  double final_loss = 0.0;
  long iterations_run = 0;
};

/// Runs the training loop.  Every iteration draws its randomness from a
/// dedicated substream of (seed, iteration), so a run interrupted at any
/// checkpoint and resumed from it reproduces the uninterrupted run bit for
/// bit.  With out_dir set, writes loss.csv rows
/// "iteration,wall_time_s,loss,lr" and checkpoint files (checkpoint_<i>.bin
/// periodically, checkpoint_final.bin at the end).  Throws NumericError,
/// naming the iteration, if the loss turns non-finite.
TrainResult train(const TrainConfig& cfg,
                  const std::vector<lie::GroupElement>& data,
                  const net::Checkpoint* resume = nullptr);

}  // namespace liegen::loss

#endif  // LIEGEN_LOSSES_HPP_
