// include/liegen/dynamics.hpp

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
/// Operator-splitting integrators for momentum-augmented Langevin dynamics on
/// compact matrix groups, with the momentum kept in flat algebra coordinates.
///
/// The forward (noising) dynamics on (g, xi) are
///     dg = g xi dt,    dxi = -gamma xi dt + sqrt(2 gamma) dW,
/// whose invariant law is Haar(G) x N(0, I_d).  A forward step (FOSI) solves
/// the momentum Ornstein-Uhlenbeck flow exactly and then the geodesic flow
/// exactly, so every iterate stays on the group by construction:
///     xi' = e^{-gamma h} xi + eps,   eps ~ N(0, (1 - e^{-2 gamma h}) I),
///     g'  = g expm(h xi').
/// The backward sampler (BSOI) reverses time with a left-point rule on the
/// score term s(g, xi, t):
///     xi' = e^{gamma h} xi + 2 (e^{gamma h} - 1) s + eps,
///     eps ~ N(0, (e^{2 gamma h} - 1) I),    g' = g expm(-h xi'),
/// and the probability-flow variant replaces the score coefficient by
/// (e^{gamma h} - 1) and drops the noise.
///
/// All steps are projection-free: drift off the group is pure round-off, and
/// an optional policy re-orthonormalizes every `reorth_every` steps.

#ifndef LIEGEN_DYNAMICS_HPP_
#define LIEGEN_DYNAMICS_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liegen/lie.hpp"
#include "liegen/rng.hpp"

namespace liegen::dyn {

// ---------------------------------------------------------------------------
// Configuration and state containers
// ---------------------------------------------------------------------------

/// Shared parameters of the forward and backward dynamics.
struct DiffusionConfig {
  lie::GroupKind kind;
  double gamma = 1.0;          ///< friction, units 1/time
  double horizon_T = 10.0;     ///< total diffusion time
  int steps_N = 500;           ///< uniform grid count, h = horizon_T / steps_N
  double eps_early_stop = 0.01;  ///< early-stopping time, in (0, horizon_T)
  int reorth_every = 100;      ///< re-orthonormalize period in steps; 0 = off

  double h() const { return horizon_T / steps_N; }
  /// Throws ConfigError if any invariant fails (gamma > 0, steps_N > 0, ...).
  void validate() const;
};

/// The state (g, xi) of a single chain.
struct PhaseState {
  lie::GroupElement g;
  lie::AlgebraVector xi;
};

/// A chain recorded at times 0, h, ..., N h.
struct Trajectory {
  std::vector<PhaseState> states;
  std::vector<double> times;
};

/// An ensemble of B chains sharing one kind: g holds B group matrices and
/// xi holds the momentum coefficients as B rows.  This is the unit the score
/// model consumes, so samplers advance all chains in lockstep with one model
/// evaluation per step.
struct StateBatch {
  lie::GroupKind kind;
  std::vector<lie::Matrix> g;
  Eigen::MatrixXd xi;  // B x algebra_dim

  int size() const { return static_cast<int>(g.size()); }
  /// Copy of chain i as a single-chain state.
  PhaseState state(int i) const;
};

// ---------------------------------------------------------------------------
// Score field interface
// ---------------------------------------------------------------------------

/// A (possibly learned) field s(g, xi, t) with values in algebra coefficients.
/// `t` carries one model-time entry per batch row.  Implementations must not
/// mutate the batch.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  /// Batched evaluation; returns B x algebra_dim.
  virtual Eigen::MatrixXd score(const StateBatch& states,
                                const Eigen::VectorXd& t) const = 0;

  /// Divergence of the field with respect to xi, one value per batch row.
  /// The base implementation uses per-coordinate central differences with
  /// step 1e-5 (adequate for analytic fields); learned models override this
  /// with an exact derivative.
  virtual Eigen::VectorXd divergence(const StateBatch& states,
                                     const Eigen::VectorXd& t) const;
};

// ---------------------------------------------------------------------------
// Single-chain steps
// ---------------------------------------------------------------------------

/// One forward step with the momentum noise supplied by the caller; the
/// deterministic core of fosi_step (pass zeros to step the noise-free flow).
PhaseState fosi_step_with_noise(const PhaseState& state,
                                const DiffusionConfig& cfg, double h,
                                const lie::Vector& eps);

/// One forward step: exact momentum OU update, then exact geodesic flow with
/// the updated momentum.
PhaseState fosi_step(const PhaseState& state, const DiffusionConfig& cfg,
                     double h, Rng& rng);

/// Forward chain from `init`: steps_N repeated fosi_step calls recorded at
/// times 0, h, ..., horizon_T, re-orthonormalizing per cfg.reorth_every.
/// steps_N = 0 is accepted here (only) and yields the init-only trajectory.
Trajectory fosi_trajectory(const PhaseState& init, const DiffusionConfig& cfg,
                           Rng& rng);

/// One backward stochastic step with caller-supplied noise; evaluates the
/// score at the left endpoint (state, t).
PhaseState bsoi_step_with_noise(const PhaseState& state,
                                const ScoreField& score, double t,
                                const DiffusionConfig& cfg, double h,
                                const lie::Vector& eps);

/// One backward stochastic step.
PhaseState bsoi_step(const PhaseState& state, const ScoreField& score,
                     double t, const DiffusionConfig& cfg, double h, Rng& rng);

/// One probability-flow step: deterministic, score coefficient
/// (e^{gamma h} - 1).
PhaseState pfode_step(const PhaseState& state, const ScoreField& score,
                      double t, const DiffusionConfig& cfg, double h);

/// Draw from the invariant law: g ~ Haar, xi ~ N(0, I).
PhaseState sample_prior(const DiffusionConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Batched ensemble operations
// ---------------------------------------------------------------------------

/// B independent draws from the invariant law.
StateBatch sample_prior_batch(const lie::GroupKind& kind, int batch, Rng& rng);

/// Forward step applied to every chain (fresh noise per chain, row-major
/// draw order).
void fosi_step_batch(StateBatch& states, double gamma, double h, Rng& rng);

/// Forward ensemble trajectory: returns steps_N + 1 snapshots at times
/// 0, h, ..., horizon_T.
std::vector<StateBatch> fosi_trajectory_batch(const StateBatch& init,
                                              const DiffusionConfig& cfg,
                                              Rng& rng);

/// Backward stochastic step applied to every chain with the score matrix `s`
/// (B x d) already evaluated at the left endpoint.
void bsoi_step_batch(StateBatch& states, const Eigen::MatrixXd& s,
                     double gamma, double h, Rng& rng);

/// Probability-flow step applied to every chain.
void pfode_step_batch(StateBatch& states, const Eigen::MatrixXd& s,
                      double gamma, double h);

/// Full generation run: start from the prior and integrate the backward
/// dynamics on the uniform grid, evaluating the score at left endpoints
/// t = 0, h, 2h, ...  With `early_stop` the run halts at horizon_T -
/// eps_early_stop (largest full step not exceeding it); otherwise it runs to
/// horizon_T.  `probability_flow` selects the deterministic integrator.
StateBatch sample_backward(const ScoreField& score, const DiffusionConfig& cfg,
                           int batch, Rng& rng, bool probability_flow = false,
                           bool early_stop = false);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// One JSON object per line: {"t": ..., "g": [...], "xi": [...]}.
std::string trajectory_to_jsonl(const Trajectory& traj);

}  // namespace liegen::dyn

#endif  // LIEGEN_DYNAMICS_HPP_
