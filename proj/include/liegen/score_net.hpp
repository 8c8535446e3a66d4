// include/liegen/score_net.hpp

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
/// The score network s(g, xi, t) -> algebra coefficients, with hand-rolled
/// 64-bit automatic differentiation:
///
///   - reverse mode over the parameters (training losses),
///   - forward mode in xi (directional derivatives for divergences), and
///   - reverse mode over the forward-mode graph (parameter gradients of
///     divergence terms, "forward-over-reverse").
///
/// Architecture: the group element is flattened row-major (complex entries
/// as re/im pairs) and passed through Linear-SiLU-Linear; the momentum
/// coefficients go through an identical two-layer MLP; the scalar time is
/// expanded with a sinusoidal embedding of dimension D (frequencies
/// 10000^{-2j/D}) followed by a trainable linear projection.  The three
/// hidden vectors are summed, group-normalized over the D channels (single
/// group, affine), passed through `depth` residual blocks
/// y <- y + W2 silu(W1 y + b1) + b2, and mapped to the algebra dimension by a
/// zero-initialized linear head.
///
/// All batched quantities are row-per-sample matrices.  Forward-mode carries
/// q simultaneous tangent directions per sample, stacked as a (q*B) x d
/// matrix whose row q_idx*B + i is tangent q_idx of sample i; tangent GEMMs
/// then run at full (q*B) height, and the parameter-cotangent contraction
/// collapses the probe blocks in a single product.

#ifndef LIEGEN_SCORE_NET_HPP_
#define LIEGEN_SCORE_NET_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liegen/dynamics.hpp"
#include "liegen/lie.hpp"
#include "liegen/rng.hpp"

namespace liegen::net {

/// Sinusoidal time features: out(i, 2j) = sin(t_i f_j), out(i, 2j+1) =
/// cos(t_i f_j) with f_j = 10000^{-2j/dim}; dim must be even.
Eigen::MatrixXd time_embedding(const Eigen::VectorXd& t, int dim);

/// Every intermediate of one batched forward pass, retained for the backward
/// and forward-mode sweeps.
struct Activations {
  int batch = 0;
  Eigen::MatrixXd Xg, Xx, E;  ///< inputs: B x n_g, B x d, B x D
  Eigen::MatrixXd a1, z1;     ///< g path pre/post first SiLU
  Eigen::MatrixXd a2, z2;     ///< xi path pre/post first SiLU
  Eigen::MatrixXd h0;         ///< summed hidden vector
  Eigen::MatrixXd c, hhat;    ///< group-norm centered / normalized
  Eigen::VectorXd var, inv;   ///< group-norm per-sample variance, 1/sqrt
  std::vector<Eigen::MatrixXd> u, s;  ///< per block: pre-SiLU, post-SiLU
  std::vector<Eigen::MatrixXd> y;     ///< y[0] post-norm ... y[depth]
  Eigen::MatrixXd out;        ///< B x d score values
};

/// Tangent counterparts (q probes stacked; all matrices have q*B rows).
struct TangentActivations {
  int probes = 0;
  Eigen::MatrixXd V;          ///< q*B x d input tangents
  Eigen::MatrixXd ta2, tz2, th0, tc, thhat;
  Eigen::VectorXd tv, tinv;   ///< q*B
  std::vector<Eigen::MatrixXd> tu, ts, ty;
  Eigen::MatrixXd tout;       ///< q*B x d output tangents
};

class ScoreModel {
 public:
  /// Constructs with all parameters zero; call init_params for training.
  /// hidden_dim must be even (sinusoid pairs); depth >= 1.
  ScoreModel(lie::GroupKind kind, int hidden_dim, int depth);

  /// Random initialization: weights uniform in +-sqrt(1/fan_in), biases and
  /// group-norm shift zero, group-norm scale one, output head zero (so the
  /// initial score field vanishes identically).
  void init_params(Rng& rng);

  const lie::GroupKind& kind() const { return kind_; }
  int hidden_dim() const { return D_; }
  int depth() const { return k_; }
  int algebra_dim() const { return d_; }
  int param_count() const { return total_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // -- forward ---------------------------------------------------------

  /// Full forward pass retaining intermediates; t has one entry per sample.
  Activations forward_act(const dyn::StateBatch& states,
                          const Eigen::VectorXd& t) const;

  /// Score values only (B x d).
  Eigen::MatrixXd forward(const dyn::StateBatch& states,
                          const Eigen::VectorXd& t) const;

  /// Single-state convenience wrapper.
  lie::AlgebraVector forward_one(const lie::GroupElement& g,
                                 const lie::AlgebraVector& xi, double t) const;

  // -- reverse mode ------------------------------------------------------

  /// Parameter gradient of sum_ij dout(i,j) * out(i,j): the caller seeds
  /// dout with the derivative of its scalar loss with respect to the score
  /// values.  Throws NumericError on a non-finite result.
  Eigen::VectorXd grad_params(const Activations& act,
                              const Eigen::MatrixXd& dout) const;

  // -- forward mode in xi ------------------------------------------------

  /// Tangent sweep for q stacked probes; V is (q*B) x d, row q_idx*B + i
  /// holding tangent q_idx of sample i.  Only the xi path carries tangents.
  TangentActivations jvp_act(const Activations& act,
                             const Eigen::MatrixXd& V) const;

  /// Directional derivative (ds/dxi) v for a single state.
  lie::AlgebraVector jvp_xi(const lie::GroupElement& g,
                            const lie::AlgebraVector& xi, double t,
                            const lie::AlgebraVector& v) const;

  /// Exact divergence d(s)_i = sum_j (ds_j/dxi_j) per sample, via
  /// algebra_dim stacked unit tangents.
  Eigen::VectorXd divergence_exact(const Activations& act) const;

  /// Hutchinson estimate with `probes` Rademacher directions per sample.
  Eigen::VectorXd divergence_hutchinson(const Activations& act, int probes,
                                        Rng& rng) const;

  // -- forward over reverse ----------------------------------------------

  /// Parameter gradient of
  ///     sum_ij dout(i,j) out(i,j)  +  sum_ij tdout(i,j) tout(i,j),
  /// i.e. one combined sweep for a loss that reads both the score values and
  /// the forward-mode tangents (the divergence term of implicit matching).
  /// `tang` must come from jvp_act on the same activations.
  Eigen::VectorXd grad_params_dual(const Activations& act,
                                   const TangentActivations& tang,
                                   const Eigen::MatrixXd& dout,
                                   const Eigen::MatrixXd& tdout) const;

  /// Tangent-seed matrix for the exact-divergence objective
  /// coeff * mean-free... specifically: d/dtout of sum_i coeff_i * div_i for
  /// the stacked-unit-tangent layout (block j seeds column j).
  Eigen::MatrixXd divergence_seed_exact(const Eigen::VectorXd& coeff) const;

  /// Tangent-seed matrix for the Hutchinson objective with probe matrix V:
  /// d/dtout of sum_i coeff_i * est_i = coeff_i / q * V row.
  Eigen::MatrixXd divergence_seed_hutchinson(const Eigen::VectorXd& coeff,
                                             const Eigen::MatrixXd& V) const;

 private:
  lie::GroupKind kind_;
  int D_, k_, d_, ng_;
  // Flat parameter buffer offsets (column-major tensors).
  int wg1_, bg1_, wg2_, bg2_, wx1_, bx1_, wx2_, bx2_, wt_, bt_;
  int gns_, gnb_;
  std::vector<int> wa_, ba_, wb_, bb_;
  int whead_, bhead_, total_;
  Eigen::VectorXd params_;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct OptimizerConfig {
  double base_lr = 5e-4;
  double weight_decay = 0.0;
  long total_iters = 1;       ///< cosine period; lr(total_iters) == 0
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  OptimizerConfig cfg;
  Eigen::VectorXd m, v;  ///< first/second moments, same shape as params
  long step = 0;         ///< completed updates

  static OptimizerState init(const ScoreModel& model,
                             const OptimizerConfig& cfg);
};

/// Half-cosine decay: base_lr * 0.5 * (1 + cos(pi * iter / total_iters)).
double cosine_lr(const OptimizerConfig& cfg, long iter);

/// Decoupled-weight-decay Adam update with bias correction, at
/// cosine_lr(opt.cfg, opt.step); increments opt.step.  Throws NumericError
/// if any parameter becomes non-finite.
void adamw_step(ScoreModel& model, OptimizerState& opt,
                const Eigen::VectorXd& grad);

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

/// One JSON header line (kind tag, dims, iteration, counts) followed by raw
/// little-endian 64-bit floats: params, then (when present) Adam m and v.
/// Round trips bit-exactly.
void save_checkpoint(const std::string& path, const ScoreModel& model,
                     const OptimizerState* opt, long iteration);

struct Checkpoint {
  ScoreModel model;
  OptimizerState opt;
  bool has_optimizer = false;
  long iteration = 0;
};

Checkpoint load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// ScoreField adapter
// ---------------------------------------------------------------------------

/// Presents a trained model to the samplers and the likelihood integrator.
/// Divergences are exact (algebra_dim forward sweeps) when algebra_dim <=
/// exact_threshold, else Hutchinson with `probes` Rademacher directions drawn
/// from an internal deterministic stream.
class NetScoreField final : public dyn::ScoreField {
 public:
  explicit NetScoreField(const ScoreModel& model, int exact_threshold = 16,
                         int probes = 32, std::uint64_t probe_seed = 0);

  Eigen::MatrixXd score(const dyn::StateBatch& states,
                        const Eigen::VectorXd& t) const override;
  Eigen::VectorXd divergence(const dyn::StateBatch& states,
                             const Eigen::VectorXd& t) const override;

 private:
  const ScoreModel& model_;
  int exact_threshold_, probes_;
  mutable Rng probe_rng_;
};

}  // namespace liegen::net

#endif  // LIEGEN_SCORE_NET_HPP_
