// src/losses.cpp

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

#include "liegen/losses.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "liegen/errors.hpp"

namespace liegen::loss {

namespace {

constexpr double kTwoPi = 2.0 * lie::kPi;

int lattice_terms(double var) {
  return std::max(5, static_cast<int>(
                         std::ceil(5.0 * std::sqrt(var) / kTwoPi)));
}

/// Lattice statistics of the wrapped normal at reduced offset
/// delta = theta - mean in [-pi, pi): the log-density and the
/// posterior-weighted pull sum_k w_k (delta + 2 pi k) / var, which is the
/// derivative of the log-density in -delta (equivalently in the mean).
struct WrapStats {
  double logpdf;
  double pull;
};

WrapStats wrap_stats(double delta, double var) {
  const int terms = lattice_terms(var);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int k = -terms; k <= terms; ++k) {
    const double x = delta + kTwoPi * k;
    max_logit = std::max(max_logit, -x * x / (2.0 * var));
  }
  double z = 0.0, moment = 0.0;
  for (int k = -terms; k <= terms; ++k) {
    const double x = delta + kTwoPi * k;
    const double w = std::exp(-x * x / (2.0 * var) - max_logit);
    z += w;
    moment += w * x;
  }
  WrapStats out;
  out.logpdf = max_logit + std::log(z) - 0.5 * std::log(kTwoPi * var);
  out.pull = moment / (z * var);
  return out;
}

double reduce_angle(double x) {
  const double r = std::remainder(x, kTwoPi);
  return (r >= lie::kPi) ? r - kTwoPi : r;  // map the +pi edge to -pi
}

}  // namespace

double wn_logpdf(double theta, double mean, double var) {
  if (!(var > 0.0)) throw ConfigError("wn_logpdf: var must be > 0");
  return wrap_stats(reduce_angle(theta - mean), var).logpdf;
}

ConditionalTransition conditional_params(double t, double gamma) {
  if (!(t > 0.0)) throw ConfigError("conditional_params: t must be > 0");
  if (!(gamma > 0.0))
    throw ConfigError("conditional_params: gamma must be > 0");
  const double s = gamma * t;
  ConditionalTransition c;
  c.decay = std::exp(-s);
  c.var_xi = -std::expm1(-2.0 * s);
  const double th = std::tanh(0.5 * s);
  c.mu_g_coeff = th / gamma;
  // 2s - 4 tanh(s/2) cancels catastrophically for small s; its expansion
  // s^3/6 + O(s^5) takes over below the crossover.
  const double var_g_s = (s < 1e-3) ? s * s * s / 6.0 : 2.0 * s - 4.0 * th;
  c.var_g = var_g_s / (gamma * gamma);
  return c;
}

Eigen::VectorXd dsm_target(const lie::GroupElement& g0,
                           const lie::GroupElement& g_t,
                           const Eigen::VectorXd& xi0,
                           const Eigen::VectorXd& xi_t, double t,
                           double gamma) {
  const lie::GroupKind& kind = g0.kind;
  if (!kind.is_abelian())
    throw ConfigError("dsm_target: closed form needs a torus power");
  if (!(g_t.kind == kind))
    throw ConfigError("dsm_target: mismatched kinds");
  const int d = kind.algebra_dim();
  if (xi0.size() != d || xi_t.size() != d)
    throw ConfigError("dsm_target: momentum size mismatch");

  const ConditionalTransition c = conditional_params(t, gamma);
  const Eigen::VectorXd theta =
      lie::torus_angles(lie::group_mul(lie::group_inv(g0), g_t));

  // Angle units: the orthonormal coefficient is sqrt(2) times the angle, so
  // the angle-domain mean and variance carry 1/sqrt(2) and 1/2.
  const double mu_scale = c.mu_g_coeff / lie::kSqrt2;
  const double var_hat = c.var_g / 2.0;

  Eigen::VectorXd target(d);
  for (int j = 0; j < d; ++j) {
    const double mu_hat = mu_scale * (xi_t[j] + xi0[j]);
    const double delta = reduce_angle(theta[j] - mu_hat);
    const double pull = wrap_stats(delta, var_hat).pull;
    target[j] =
        mu_scale * pull + (c.decay * xi0[j] - xi_t[j]) / c.var_xi;
  }
  return target;
}

DsmDraw dsm_sample(const lie::GroupElement& g0, double t, double gamma,
                   Rng& rng) {
  const lie::GroupKind& kind = g0.kind;
  if (!kind.is_abelian())
    throw ConfigError("dsm_sample: closed form needs a torus power");
  const ConditionalTransition c = conditional_params(t, gamma);
  const int d = kind.algebra_dim();

  DsmDraw draw;
  draw.xi0.resize(d);
  fill_gaussian(rng, draw.xi0);
  Eigen::VectorXd z(d);
  fill_gaussian(rng, z);
  draw.xi_t = c.decay * draw.xi0 + std::sqrt(c.var_xi) * z;
  fill_gaussian(rng, z);
  const Eigen::VectorXd y = c.mu_g_coeff * (draw.xi_t + draw.xi0) +
                            std::sqrt(c.var_g) * z;
  draw.g_t = g0;
  lie::right_multiply_exp(draw.g_t, y, 1.0);
  draw.target = dsm_target(g0, draw.g_t, draw.xi0, draw.xi_t, t, gamma);
  return draw;
}

DsmBatch make_dsm_batch(const std::vector<lie::GroupElement>& data, int batch,
                        const DsmConfig& cfg, Rng& rng) {
  if (data.empty()) throw ConfigError("make_dsm_batch: empty data");
  if (batch < 1) throw ConfigError("make_dsm_batch: batch must be >= 1");
  const lie::GroupKind& kind = data.front().kind;
  const int d = kind.algebra_dim();

  DsmBatch out;
  out.states.kind = kind;
  out.states.g.reserve(batch);
  out.states.xi.resize(batch, d);
  out.tau.resize(batch);
  out.target.resize(batch, d);

  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_real_distribution<double> tdist(
      cfg.t_floor_frac * cfg.horizon_T, cfg.horizon_T);
  for (int i = 0; i < batch; ++i) {
    const lie::GroupElement& g0 = data[pick(rng)];
    const double t = tdist(rng);
    DsmDraw draw = dsm_sample(g0, t, cfg.gamma, rng);
    out.states.g.push_back(std::move(draw.g_t.mat));
    out.states.xi.row(i) = draw.xi_t.transpose();
    out.target.row(i) = draw.target.transpose();
    out.tau[i] = cfg.horizon_T - t;
  }
  return out;
}

double mean_squared_residual(const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& target) {
  if (s.rows() != target.rows() || s.cols() != target.cols())
    throw ConfigError("mean_squared_residual: shape mismatch");
  return (s - target).squaredNorm() / s.rows();
}

LossValue dsm_loss(const net::ScoreModel& model, const DsmBatch& batch) {
  const net::Activations act = model.forward_act(batch.states, batch.tau);
  const int b = act.batch;
  const Eigen::MatrixXd resid = act.out - batch.target;
  LossValue lv;
  lv.value = resid.squaredNorm() / b;
  lv.grad = model.grad_params(act, (2.0 / b) * resid);
  return lv;
}

double ism_objective(const dyn::ScoreField& field,
                     const dyn::StateBatch& states,
                     const Eigen::VectorXd& t) {
  const Eigen::MatrixXd s = field.score(states, t);
  const Eigen::VectorXd div = field.divergence(states, t);
  const int b = states.size();
  return (s.squaredNorm() + 2.0 * div.sum()) / b;
}

LossValue ism_loss_exact(const net::ScoreModel& model,
                         const dyn::StateBatch& states,
                         const Eigen::VectorXd& tau) {
  const net::Activations act = model.forward_act(states, tau);
  const int b = act.batch;
  const int d = model.algebra_dim();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d * b, d);
  for (int j = 0; j < d; ++j) v.middleRows(j * b, b).col(j).setOnes();
  const net::TangentActivations tg = model.jvp_act(act, v);
  double div_sum = 0.0;
  for (int j = 0; j < d; ++j)
    div_sum += tg.tout.middleRows(j * b, b).col(j).sum();

  LossValue lv;
  lv.value = (act.out.squaredNorm() + 2.0 * div_sum) / b;
  const Eigen::VectorXd coeff = Eigen::VectorXd::Constant(b, 2.0 / b);
  lv.grad = model.grad_params_dual(act, tg, (2.0 / b) * act.out,
                                   model.divergence_seed_exact(coeff));
  return lv;
}

LossValue ism_loss_hutchinson(const net::ScoreModel& model,
                              const dyn::StateBatch& states,
                              const Eigen::VectorXd& tau,
                              const Eigen::MatrixXd& probes) {
  const net::Activations act = model.forward_act(states, tau);
  const int b = act.batch;
  if (probes.cols() != model.algebra_dim() || probes.rows() % b != 0)
    throw ConfigError("ism_loss_hutchinson: probe stack must be (q*B) x d");
  const int q = static_cast<int>(probes.rows()) / b;
  const net::TangentActivations tg = model.jvp_act(act, probes);
  double div_sum = 0.0;
  for (int j = 0; j < q; ++j)
    div_sum += (probes.middleRows(j * b, b).array() *
                tg.tout.middleRows(j * b, b).array())
                   .sum() /
               q;

  LossValue lv;
  lv.value = (act.out.squaredNorm() + 2.0 * div_sum) / b;
  const Eigen::VectorXd coeff = Eigen::VectorXd::Constant(b, 2.0 / b);
  lv.grad =
      model.grad_params_dual(act, tg, (2.0 / b) * act.out,
                             model.divergence_seed_hutchinson(coeff, probes));
  return lv;
}

LossValue ism_loss(const net::ScoreModel& model, const dyn::StateBatch& states,
                   const Eigen::VectorXd& tau, const IsmConfig& cfg,
                   Rng& rng) {
  if (model.algebra_dim() <= cfg.exact_threshold)
    return ism_loss_exact(model, states, tau);
  if (cfg.probes < 1) throw ConfigError("ism_loss: probes must be >= 1");
  Eigen::MatrixXd v(static_cast<Eigen::Index>(cfg.probes) * states.size(),
                    model.algebra_dim());
  fill_rademacher(rng, v);
  return ism_loss_hutchinson(model, states, tau, v);
}

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

int TrainConfig::resolved_hidden_dim() const {
  if (hidden_dim > 0) return hidden_dim;
  return kind.algebra_dim() <= 10 ? 256 : 512;
}

LossKind TrainConfig::resolved_loss() const {
  if (loss != LossKind::kAuto) return loss;
  return kind.is_abelian() ? LossKind::kDsm : LossKind::kIsm;
}

namespace {

constexpr std::uint64_t kIterTag = 0x17e4;
constexpr std::uint64_t kInitTagA = 0xA11CE;
constexpr std::uint64_t kInitTagB = 0x5eed;

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.iters < 0) throw ConfigError("train: iters must be >= 0");
  if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
  if (cfg.depth < 1) throw ConfigError("train: depth must be >= 1");
  if (!(cfg.gamma > 0.0)) throw ConfigError("train: gamma must be > 0");
  if (!(cfg.horizon_T > 0.0))
    throw ConfigError("train: horizon_T must be > 0");
  if (cfg.steps_N < 1) throw ConfigError("train: steps_N must be >= 1");
  if (cfg.log_every < 1) throw ConfigError("train: log_every must be >= 1");
  if (cfg.resolved_loss() == LossKind::kDsm && !cfg.kind.is_abelian())
    throw ConfigError(
        "train: the denoising loss needs a torus power; use the implicit "
        "loss for this kind");
}

/// Uniform (trajectory, step >= 1) pairs from a freshly simulated forward
/// ensemble; the pool holds ceil(batch / N) trajectories of N steps.
void make_ism_batch(const TrainConfig& cfg,
                    const std::vector<lie::GroupElement>& data, Rng& rng,
                    dyn::StateBatch& states, Eigen::VectorXd& tau) {
  const int n_steps = cfg.steps_N;
  const int chains = (cfg.batch + n_steps - 1) / n_steps;
  const int d = cfg.kind.algebra_dim();

  dyn::StateBatch init;
  init.kind = cfg.kind;
  init.g.reserve(chains);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  for (int i = 0; i < chains; ++i) init.g.push_back(data[pick(rng)].mat);
  init.xi.resize(chains, d);
  fill_gaussian(rng, init.xi);

  dyn::DiffusionConfig dcfg;
  dcfg.kind = cfg.kind;
  dcfg.gamma = cfg.gamma;
  dcfg.horizon_T = cfg.horizon_T;
  dcfg.steps_N = n_steps;
  const std::vector<dyn::StateBatch> snaps =
      dyn::fosi_trajectory_batch(init, dcfg, rng);

  states = dyn::StateBatch{};
  states.kind = cfg.kind;
  states.g.reserve(cfg.batch);
  states.xi.resize(cfg.batch, d);
  tau.resize(cfg.batch);
  std::uniform_int_distribution<int> pick_step(1, n_steps);
  std::uniform_int_distribution<int> pick_chain(0, chains - 1);
  const double h = dcfg.h();
  for (int i = 0; i < cfg.batch; ++i) {
    const int n = pick_step(rng);
    const int c = pick_chain(rng);
    states.g.push_back(snaps[n].g[c]);
    states.xi.row(i) = snaps[n].xi.row(c);
    tau[i] = cfg.horizon_T - n * h;
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg,
                  const std::vector<lie::GroupElement>& data,
                  const net::Checkpoint* resume) {
  validate_train_config(cfg);
  const LossKind used = cfg.resolved_loss();
  const long start = resume ? resume->iteration : 0;
  if (start > cfg.iters)
    throw ConfigError("train: resume checkpoint is past the final iteration");
  if (start < cfg.iters && data.empty())
    throw ConfigError("train: no training data");
  if (resume && !(resume->model.kind() == cfg.kind))
    throw ConfigError("train: resume checkpoint has a different kind");

  net::OptimizerConfig ocfg;
  ocfg.base_lr = cfg.base_lr;
  ocfg.weight_decay = cfg.weight_decay;
  ocfg.total_iters = std::max<long>(1, cfg.iters);

  net::ScoreModel model =
      resume ? resume->model
             : net::ScoreModel(cfg.kind, cfg.resolved_hidden_dim(),
                               cfg.depth);
  net::OptimizerState opt = (resume && resume->has_optimizer)
                                ? resume->opt
                                : net::OptimizerState::init(model, ocfg);
  opt.cfg = ocfg;  // the schedule always follows the live config
  if (!resume) {
    Rng init_rng = make_stream(cfg.seed, kInitTagA, kInitTagB);
    model.init_params(init_rng);
  }

  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/loss.csv";
    csv.open(path, start == 0 ? std::ios::trunc : std::ios::app);
    if (!csv) throw IoError("train: cannot open " + path);
    if (start == 0) csv << "iteration,wall_time_s,loss,lr\n";
  }
  const auto t_start = std::chrono::steady_clock::now();

  DsmConfig dsm_cfg;
  dsm_cfg.horizon_T = cfg.horizon_T;
  dsm_cfg.gamma = cfg.gamma;
  dsm_cfg.t_floor_frac = cfg.dsm_t_floor_frac;

  double last_loss = 0.0;
  for (long it = start; it < cfg.iters; ++it) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(it), kIterTag);
    const double lr = net::cosine_lr(opt.cfg, opt.step);

    LossValue lv;
    try {
      if (used == LossKind::kDsm) {
        const DsmBatch batch = make_dsm_batch(data, cfg.batch, dsm_cfg, rng);
        lv = dsm_loss(model, batch);
      } else {
        dyn::StateBatch states;
        Eigen::VectorXd tau;
        make_ism_batch(cfg, data, rng, states, tau);
        lv = ism_loss(model, states, tau, cfg.ism, rng);
      }
      if (!std::isfinite(lv.value))
        throw NumericError("train: non-finite loss");
      net::adamw_step(model, opt, lv.grad);
    } catch (const NumericError& e) {
      // Every numeric failure inside the loop names the iteration it hit.
      throw NumericError("train: iteration " + std::to_string(it) + ": " +
                         e.what());
    }
    last_loss = lv.value;

    if (csv.is_open() &&
        (it % cfg.log_every == 0 || it + 1 == cfg.iters)) {
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        t_start)
              .count();
      csv << it << ',' << wall << ',' << lv.value << ',' << lr << '\n';
      csv.flush();
    }
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 &&
        (it + 1) % cfg.checkpoint_every == 0 && it + 1 < cfg.iters) {
      net::save_checkpoint(
          cfg.out_dir + "/checkpoint_" + std::to_string(it + 1) + ".bin",
          model, &opt, it + 1);
    }
  }
  if (!cfg.out_dir.empty())
    net::save_checkpoint(cfg.out_dir + "/checkpoint_final.bin", model, &opt,
                         cfg.iters);

  TrainResult result{std::move(model), std::move(opt), used, last_loss,
                     cfg.iters - start};
  return result;
}

}  // namespace liegen::loss
