// src/score_net.cpp

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

#include "liegen/score_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "liegen/errors.hpp"

namespace liegen::net {

namespace {

constexpr double kGnEps = 1e-12;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

double silu_d1(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double silu_d2(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
}

Eigen::MatrixXd apply(const Eigen::MatrixXd& m, double (*f)(double)) {
  return m.unaryExpr(f);
}

using CMap = Eigen::Map<const Eigen::MatrixXd>;
using MMap = Eigen::Map<Eigen::MatrixXd>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using MVec = Eigen::Map<Eigen::VectorXd>;

CMap cmat(const Eigen::VectorXd& buf, int off, int r, int c) {
  return CMap(buf.data() + off, r, c);
}
MMap mmat(Eigen::VectorXd& buf, int off, int r, int c) {
  return MMap(buf.data() + off, r, c);
}
CVec cvec(const Eigen::VectorXd& buf, int off, int n) {
  return CVec(buf.data() + off, n);
}
MVec mvec(Eigen::VectorXd& buf, int off, int n) {
  return MVec(buf.data() + off, n);
}

/// Per-sample dot products of matching rows.
template <typename DA, typename DB>
Eigen::VectorXd rowdot(const Eigen::MatrixBase<DA>& a,
                       const Eigen::MatrixBase<DB>& b) {
  return (a.derived().array() * b.derived().array())
      .rowwise()
      .sum()
      .matrix();
}

/// Subtract each row's mean from the row.
Eigen::MatrixXd center_rows(const Eigen::MatrixXd& m) {
  return m.colwise() - m.rowwise().mean();
}

}  // namespace

Eigen::MatrixXd time_embedding(const Eigen::VectorXd& t, int dim) {
  if (dim % 2 != 0) throw ConfigError("time_embedding: dim must be even");
  const int half = dim / 2;
  Eigen::MatrixXd out(t.size(), dim);
  for (int j = 0; j < half; ++j) {
    const double freq = std::pow(10000.0, -2.0 * j / dim);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      out(i, 2 * j) = std::sin(t[i] * freq);
      out(i, 2 * j + 1) = std::cos(t[i] * freq);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

ScoreModel::ScoreModel(lie::GroupKind kind, int hidden_dim, int depth)
    : kind_(std::move(kind)), D_(hidden_dim), k_(depth) {
  if (D_ < 2 || D_ % 2 != 0)
    throw ConfigError("ScoreModel: hidden_dim must be even and >= 2");
  if (k_ < 1) throw ConfigError("ScoreModel: depth must be >= 1");
  d_ = kind_.algebra_dim();
  ng_ = lie::flat_dim(kind_);

  int off = 0;
  auto take = [&off](int n) {
    const int at = off;
    off += n;
    return at;
  };
  wg1_ = take(ng_ * D_);
  bg1_ = take(D_);
  wg2_ = take(D_ * D_);
  bg2_ = take(D_);
  wx1_ = take(d_ * D_);
  bx1_ = take(D_);
  wx2_ = take(D_ * D_);
  bx2_ = take(D_);
  wt_ = take(D_ * D_);
  bt_ = take(D_);
  gns_ = take(D_);
  gnb_ = take(D_);
  wa_.resize(k_);
  ba_.resize(k_);
  wb_.resize(k_);
  bb_.resize(k_);
  for (int j = 0; j < k_; ++j) {
    wa_[j] = take(D_ * D_);
    ba_[j] = take(D_);
    wb_[j] = take(D_ * D_);
    bb_[j] = take(D_);
  }
  whead_ = take(D_ * d_);
  bhead_ = take(d_);
  total_ = off;
  params_ = Eigen::VectorXd::Zero(total_);
}

void ScoreModel::init_params(Rng& rng) {
  params_.setZero();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto fill = [&](int off, int rows, int cols, int fan_in) {
    const double bound = std::sqrt(1.0 / fan_in);
    MMap w = mmat(params_, off, rows, cols);
    // Row-major fill for a storage-order-independent draw sequence.
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = bound * unit(rng);
  };
  fill(wg1_, ng_, D_, ng_);
  fill(wg2_, D_, D_, D_);
  fill(wx1_, d_, D_, d_);
  fill(wx2_, D_, D_, D_);
  fill(wt_, D_, D_, D_);
  mvec(params_, gns_, D_).setOnes();
  for (int j = 0; j < k_; ++j) {
    fill(wa_[j], D_, D_, D_);
    fill(wb_[j], D_, D_, D_);
  }
  // Output head stays zero: the initial field is identically zero.
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

Activations ScoreModel::forward_act(const dyn::StateBatch& states,
                                    const Eigen::VectorXd& t) const {
  const int B = states.size();
  if (!(states.kind == kind_))
    throw ConfigError("ScoreModel: state kind does not match the model");
  if (t.size() != B)
    throw ConfigError("ScoreModel: time vector length != batch size");
  if (states.xi.rows() != B || states.xi.cols() != d_)
    throw ConfigError("ScoreModel: momentum block has wrong shape");

  Activations act;
  act.batch = B;
  act.Xg.resize(B, ng_);
  for (int i = 0; i < B; ++i) {
    Eigen::RowVectorXd row(ng_);
    lie::flatten_element(kind_, states.g[i], row);
    act.Xg.row(i) = row;
  }
  act.Xx = states.xi;
  act.E = time_embedding(t, D_);

  const auto& p = params_;
  act.a1 = (act.Xg * cmat(p, wg1_, ng_, D_)).rowwise() +
           cvec(p, bg1_, D_).transpose();
  act.z1 = apply(act.a1, silu);
  const Eigen::MatrixXd g_hid =
      (act.z1 * cmat(p, wg2_, D_, D_)).rowwise() +
      cvec(p, bg2_, D_).transpose();

  act.a2 = (act.Xx * cmat(p, wx1_, d_, D_)).rowwise() +
           cvec(p, bx1_, D_).transpose();
  act.z2 = apply(act.a2, silu);
  const Eigen::MatrixXd x_hid =
      (act.z2 * cmat(p, wx2_, D_, D_)).rowwise() +
      cvec(p, bx2_, D_).transpose();

  const Eigen::MatrixXd t_hid =
      (act.E * cmat(p, wt_, D_, D_)).rowwise() + cvec(p, bt_, D_).transpose();

  act.h0 = g_hid + x_hid + t_hid;

  // Group norm: one group over all D channels, per sample.
  act.c = center_rows(act.h0);
  act.var = act.c.rowwise().squaredNorm() / D_;
  act.inv = (act.var.array() + kGnEps).rsqrt().matrix();
  act.hhat = (act.c.array().colwise() * act.inv.array()).matrix();

  act.y.resize(k_ + 1);
  act.u.resize(k_);
  act.s.resize(k_);
  act.y[0] = ((act.hhat.array().rowwise() *
               cvec(p, gns_, D_).transpose().array())
                  .rowwise() +
              cvec(p, gnb_, D_).transpose().array())
                 .matrix();
  for (int j = 0; j < k_; ++j) {
    act.u[j] = (act.y[j] * cmat(p, wa_[j], D_, D_)).rowwise() +
               cvec(p, ba_[j], D_).transpose();
    act.s[j] = apply(act.u[j], silu);
    act.y[j + 1] = act.y[j] +
                   ((act.s[j] * cmat(p, wb_[j], D_, D_)).rowwise() +
                    cvec(p, bb_[j], D_).transpose())
                       .matrix();
  }
  act.out = (act.y[k_] * cmat(p, whead_, D_, d_)).rowwise() +
            cvec(p, bhead_, d_).transpose();
  if (!act.out.allFinite())
    throw NumericError("ScoreModel::forward: non-finite output");
  return act;
}

Eigen::MatrixXd ScoreModel::forward(const dyn::StateBatch& states,
                                    const Eigen::VectorXd& t) const {
  return forward_act(states, t).out;
}

lie::AlgebraVector ScoreModel::forward_one(const lie::GroupElement& g,
                                           const lie::AlgebraVector& xi,
                                           double t) const {
  dyn::StateBatch sb{kind_, {g.mat}, xi.coeffs.transpose()};
  const Eigen::MatrixXd out =
      forward(sb, Eigen::VectorXd::Constant(1, t));
  return lie::AlgebraVector{kind_, out.row(0).transpose()};
}

// ---------------------------------------------------------------------------
// Reverse mode
// ---------------------------------------------------------------------------

Eigen::VectorXd ScoreModel::grad_params(const Activations& act,
                                        const Eigen::MatrixXd& dout) const {
  const auto& p = params_;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(total_);

  mmat(grad, whead_, D_, d_) += act.y[k_].transpose() * dout;
  mvec(grad, bhead_, d_) += dout.colwise().sum().transpose();
  Eigen::MatrixXd dy = dout * cmat(p, whead_, D_, d_).transpose();

  for (int j = k_ - 1; j >= 0; --j) {
    mmat(grad, wb_[j], D_, D_) += act.s[j].transpose() * dy;
    mvec(grad, bb_[j], D_) += dy.colwise().sum().transpose();
    const Eigen::MatrixXd ds = dy * cmat(p, wb_[j], D_, D_).transpose();
    const Eigen::MatrixXd du =
        (ds.array() * apply(act.u[j], silu_d1).array()).matrix();
    mmat(grad, wa_[j], D_, D_) += act.y[j].transpose() * du;
    mvec(grad, ba_[j], D_) += du.colwise().sum().transpose();
    dy += du * cmat(p, wa_[j], D_, D_).transpose();
  }

  // Affine group-norm parameters.
  mvec(grad, gns_, D_) +=
      (dy.array() * act.hhat.array()).colwise().sum().transpose().matrix();
  mvec(grad, gnb_, D_) += dy.colwise().sum().transpose();
  const Eigen::MatrixXd dhh =
      (dy.array().rowwise() * cvec(p, gns_, D_).transpose().array())
          .matrix();

  // hhat = c * inv, inv = (var + eps)^{-1/2}, var = |c|^2 / D.
  Eigen::VectorXd dinv = rowdot(dhh, act.c);
  Eigen::MatrixXd dc =
      (dhh.array().colwise() * act.inv.array()).matrix();
  const Eigen::VectorXd dvar =
      (-0.5 * dinv.array() * act.inv.array().cube()).matrix();
  dc.array() += (2.0 / D_) * (act.c.array().colwise() * dvar.array());
  const Eigen::MatrixXd dh0 = center_rows(dc);

  // g path.
  mmat(grad, wg2_, D_, D_) += act.z1.transpose() * dh0;
  mvec(grad, bg2_, D_) += dh0.colwise().sum().transpose();
  const Eigen::MatrixXd dz1 = dh0 * cmat(p, wg2_, D_, D_).transpose();
  const Eigen::MatrixXd da1 =
      (dz1.array() * apply(act.a1, silu_d1).array()).matrix();
  mmat(grad, wg1_, ng_, D_) += act.Xg.transpose() * da1;
  mvec(grad, bg1_, D_) += da1.colwise().sum().transpose();

  // xi path.
  mmat(grad, wx2_, D_, D_) += act.z2.transpose() * dh0;
  mvec(grad, bx2_, D_) += dh0.colwise().sum().transpose();
  const Eigen::MatrixXd dz2 = dh0 * cmat(p, wx2_, D_, D_).transpose();
  const Eigen::MatrixXd da2 =
      (dz2.array() * apply(act.a2, silu_d1).array()).matrix();
  mmat(grad, wx1_, d_, D_) += act.Xx.transpose() * da2;
  mvec(grad, bx1_, D_) += da2.colwise().sum().transpose();

  // time path.
  mmat(grad, wt_, D_, D_) += act.E.transpose() * dh0;
  mvec(grad, bt_, D_) += dh0.colwise().sum().transpose();

  if (!grad.allFinite())
    throw NumericError("ScoreModel::grad_params: non-finite gradient");
  return grad;
}

// ---------------------------------------------------------------------------
// Forward mode in xi
// ---------------------------------------------------------------------------

TangentActivations ScoreModel::jvp_act(const Activations& act,
                                       const Eigen::MatrixXd& V) const {
  const int B = act.batch;
  if (V.cols() != d_ || V.rows() % B != 0)
    throw ConfigError("jvp_act: tangent matrix must be (q*B) x d");
  const int q = static_cast<int>(V.rows()) / B;
  const auto& p = params_;

  TangentActivations tg;
  tg.probes = q;
  tg.V = V;
  tg.ta2 = V * cmat(p, wx1_, d_, D_);

  const Eigen::MatrixXd sp2 = apply(act.a2, silu_d1);
  tg.tz2.resize(q * B, D_);
  for (int j = 0; j < q; ++j)
    tg.tz2.middleRows(j * B, B) =
        (tg.ta2.middleRows(j * B, B).array() * sp2.array()).matrix();

  tg.th0 = tg.tz2 * cmat(p, wx2_, D_, D_);
  tg.tc = center_rows(tg.th0);
  tg.tv.resize(q * B);
  tg.tinv.resize(q * B);
  tg.thhat.resize(q * B, D_);
  for (int j = 0; j < q; ++j) {
    const auto tcb = tg.tc.middleRows(j * B, B);
    tg.tv.segment(j * B, B) = (2.0 / D_) * rowdot(act.c, tcb);
    tg.tinv.segment(j * B, B) = (-0.5 * act.inv.array().cube() *
                                 tg.tv.segment(j * B, B).array())
                                    .matrix();
    tg.thhat.middleRows(j * B, B) =
        ((tcb.array().colwise() * act.inv.array()) +
         (act.c.array().colwise() *
          tg.tinv.segment(j * B, B).array()))
            .matrix();
  }

  tg.ty.resize(k_ + 1);
  tg.tu.resize(k_);
  tg.ts.resize(k_);
  tg.ty[0] = (tg.thhat.array().rowwise() *
              cvec(p, gns_, D_).transpose().array())
                 .matrix();
  for (int blk = 0; blk < k_; ++blk) {
    tg.tu[blk] = tg.ty[blk] * cmat(p, wa_[blk], D_, D_);
    const Eigen::MatrixXd spu = apply(act.u[blk], silu_d1);
    tg.ts[blk].resize(q * B, D_);
    for (int j = 0; j < q; ++j)
      tg.ts[blk].middleRows(j * B, B) =
          (tg.tu[blk].middleRows(j * B, B).array() * spu.array())
              .matrix();
    tg.ty[blk + 1] = tg.ty[blk] + tg.ts[blk] * cmat(p, wb_[blk], D_, D_);
  }
  tg.tout = tg.ty[k_] * cmat(p, whead_, D_, d_);
  if (!tg.tout.allFinite())
    throw NumericError("ScoreModel::jvp_act: non-finite tangent");
  return tg;
}

lie::AlgebraVector ScoreModel::jvp_xi(const lie::GroupElement& g,
                                      const lie::AlgebraVector& xi, double t,
                                      const lie::AlgebraVector& v) const {
  dyn::StateBatch sb{kind_, {g.mat}, xi.coeffs.transpose()};
  const Activations act =
      forward_act(sb, Eigen::VectorXd::Constant(1, t));
  const TangentActivations tg = jvp_act(act, v.coeffs.transpose());
  return lie::AlgebraVector{kind_, tg.tout.row(0).transpose()};
}

Eigen::VectorXd ScoreModel::divergence_exact(const Activations& act) const {
  const int B = act.batch;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(d_ * B, d_);
  for (int j = 0; j < d_; ++j) V.middleRows(j * B, B).col(j).setOnes();
  const TangentActivations tg = jvp_act(act, V);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(B);
  for (int j = 0; j < d_; ++j)
    div += tg.tout.middleRows(j * B, B).col(j);
  return div;
}

Eigen::VectorXd ScoreModel::divergence_hutchinson(const Activations& act,
                                                  int probes,
                                                  Rng& rng) const {
  if (probes < 1)
    throw ConfigError("divergence_hutchinson: probes must be >= 1");
  const int B = act.batch;
  Eigen::MatrixXd V(probes * B, d_);
  fill_rademacher(rng, V);
  const TangentActivations tg = jvp_act(act, V);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(B);
  for (int j = 0; j < probes; ++j)
    div += rowdot(V.middleRows(j * B, B), tg.tout.middleRows(j * B, B));
  return div / probes;
}

Eigen::MatrixXd ScoreModel::divergence_seed_exact(
    const Eigen::VectorXd& coeff) const {
  const int B = static_cast<int>(coeff.size());
  Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(d_ * B, d_);
  for (int j = 0; j < d_; ++j) seed.middleRows(j * B, B).col(j) = coeff;
  return seed;
}

Eigen::MatrixXd ScoreModel::divergence_seed_hutchinson(
    const Eigen::VectorXd& coeff, const Eigen::MatrixXd& V) const {
  const int B = static_cast<int>(coeff.size());
  const int q = static_cast<int>(V.rows()) / B;
  Eigen::MatrixXd seed(V.rows(), d_);
  for (int j = 0; j < q; ++j)
    seed.middleRows(j * B, B) = (V.middleRows(j * B, B).array().colwise() *
                                 (coeff.array() / q))
                                    .matrix();
  return seed;
}

// ---------------------------------------------------------------------------
// Forward over reverse
// ---------------------------------------------------------------------------

Eigen::VectorXd ScoreModel::grad_params_dual(
    const Activations& act, const TangentActivations& tang,
    const Eigen::MatrixXd& dout, const Eigen::MatrixXd& tdout) const {
  const int B = act.batch;
  const int q = tang.probes;
  const auto& p = params_;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(total_);

  // Head: out = y_k W + b; tout = ty_k W.
  mmat(grad, whead_, D_, d_) +=
      act.y[k_].transpose() * dout + tang.ty[k_].transpose() * tdout;
  mvec(grad, bhead_, d_) += dout.colwise().sum().transpose();
  Eigen::MatrixXd dy = dout * cmat(p, whead_, D_, d_).transpose();
  Eigen::MatrixXd tdy = tdout * cmat(p, whead_, D_, d_).transpose();

  for (int blk = k_ - 1; blk >= 0; --blk) {
    // y' = y + s Wb + bb ; ty' = ty + ts Wb.
    mmat(grad, wb_[blk], D_, D_) +=
        act.s[blk].transpose() * dy + tang.ts[blk].transpose() * tdy;
    mvec(grad, bb_[blk], D_) += dy.colwise().sum().transpose();
    const Eigen::MatrixXd ds = dy * cmat(p, wb_[blk], D_, D_).transpose();
    const Eigen::MatrixXd tds = tdy * cmat(p, wb_[blk], D_, D_).transpose();

    // s = silu(u) ; ts = silu'(u) tu.
    const Eigen::MatrixXd sp = apply(act.u[blk], silu_d1);
    const Eigen::MatrixXd spp = apply(act.u[blk], silu_d2);
    Eigen::MatrixXd du = (ds.array() * sp.array()).matrix();
    Eigen::MatrixXd tdu(q * B, D_);
    for (int j = 0; j < q; ++j) {
      du.array() += spp.array() *
                    (tds.middleRows(j * B, B).array() *
                     tang.tu[blk].middleRows(j * B, B).array());
      tdu.middleRows(j * B, B) =
          (tds.middleRows(j * B, B).array() * sp.array()).matrix();
    }

    // u = y Wa + ba ; tu = ty Wa.
    mmat(grad, wa_[blk], D_, D_) +=
        act.y[blk].transpose() * du + tang.ty[blk].transpose() * tdu;
    mvec(grad, ba_[blk], D_) += du.colwise().sum().transpose();
    dy += du * cmat(p, wa_[blk], D_, D_).transpose();
    tdy += tdu * cmat(p, wa_[blk], D_, D_).transpose();
  }

  // Affine: y0 = gns hhat + gnb ; ty0 = gns thhat.
  mvec(grad, gns_, D_) +=
      (dy.array() * act.hhat.array()).colwise().sum().transpose().matrix() +
      (tdy.array() * tang.thhat.array())
          .colwise()
          .sum()
          .transpose()
          .matrix();
  mvec(grad, gnb_, D_) += dy.colwise().sum().transpose();
  const Eigen::RowVectorXd gns_row = cvec(p, gns_, D_).transpose();
  const Eigen::MatrixXd dhh =
      (dy.array().rowwise() * gns_row.array()).matrix();
  const Eigen::MatrixXd tdhh =
      (tdy.array().rowwise() * gns_row.array()).matrix();

  // hhat = c inv ; thhat = tc inv + c tinv.
  Eigen::VectorXd dinv = rowdot(dhh, act.c);
  Eigen::MatrixXd dc =
      (dhh.array().colwise() * act.inv.array()).matrix();
  Eigen::MatrixXd tdc(q * B, D_);
  Eigen::VectorXd tdinv(q * B);
  for (int j = 0; j < q; ++j) {
    const auto tdhhb = tdhh.middleRows(j * B, B);
    dinv += rowdot(tdhhb, tang.tc.middleRows(j * B, B));
    dc.array() += tdhhb.array().colwise() *
                  tang.tinv.segment(j * B, B).array();
    tdc.middleRows(j * B, B) =
        (tdhhb.array().colwise() * act.inv.array()).matrix();
    tdinv.segment(j * B, B) = rowdot(tdhhb, act.c);
  }

  // tinv = -1/2 inv^3 tv.
  Eigen::VectorXd tdv(q * B);
  for (int j = 0; j < q; ++j) {
    dinv.array() += tdinv.segment(j * B, B).array() *
                    (-1.5 * act.inv.array().square() *
                     tang.tv.segment(j * B, B).array());
    tdv.segment(j * B, B) = (-0.5 * act.inv.array().cube() *
                             tdinv.segment(j * B, B).array())
                                .matrix();
  }

  // tv = (2/D) <c, tc>.
  for (int j = 0; j < q; ++j) {
    dc.array() += (2.0 / D_) * (tang.tc.middleRows(j * B, B).array()
                                    .colwise() *
                                tdv.segment(j * B, B).array());
    tdc.middleRows(j * B, B).array() +=
        (2.0 / D_) *
        (act.c.array().colwise() * tdv.segment(j * B, B).array());
  }

  // inv = (var + eps)^{-1/2} ; var = |c|^2 / D.
  const Eigen::VectorXd dvar =
      (-0.5 * dinv.array() * act.inv.array().cube()).matrix();
  dc.array() += (2.0 / D_) * (act.c.array().colwise() * dvar.array());

  // c = h0 - rowmean(h0) ; tc = th0 - rowmean(th0).
  const Eigen::MatrixXd dh0 = center_rows(dc);
  const Eigen::MatrixXd tdh0 = center_rows(tdc);

  // g path (primal only: the g tangent is zero).
  mmat(grad, wg2_, D_, D_) += act.z1.transpose() * dh0;
  mvec(grad, bg2_, D_) += dh0.colwise().sum().transpose();
  const Eigen::MatrixXd dz1 = dh0 * cmat(p, wg2_, D_, D_).transpose();
  const Eigen::MatrixXd da1 =
      (dz1.array() * apply(act.a1, silu_d1).array()).matrix();
  mmat(grad, wg1_, ng_, D_) += act.Xg.transpose() * da1;
  mvec(grad, bg1_, D_) += da1.colwise().sum().transpose();

  // time path (primal only).
  mmat(grad, wt_, D_, D_) += act.E.transpose() * dh0;
  mvec(grad, bt_, D_) += dh0.colwise().sum().transpose();

  // xi path: x_hid = z2 Wx2 + b ; tx_hid = tz2 Wx2.
  mmat(grad, wx2_, D_, D_) +=
      act.z2.transpose() * dh0 + tang.tz2.transpose() * tdh0;
  mvec(grad, bx2_, D_) += dh0.colwise().sum().transpose();
  const Eigen::MatrixXd dz2 = dh0 * cmat(p, wx2_, D_, D_).transpose();
  const Eigen::MatrixXd tdz2 = tdh0 * cmat(p, wx2_, D_, D_).transpose();

  // z2 = silu(a2) ; tz2 = silu'(a2) ta2.
  const Eigen::MatrixXd sp2 = apply(act.a2, silu_d1);
  const Eigen::MatrixXd spp2 = apply(act.a2, silu_d2);
  Eigen::MatrixXd da2 = (dz2.array() * sp2.array()).matrix();
  Eigen::MatrixXd tda2(q * B, D_);
  for (int j = 0; j < q; ++j) {
    da2.array() += spp2.array() * (tdz2.middleRows(j * B, B).array() *
                                   tang.ta2.middleRows(j * B, B).array());
    tda2.middleRows(j * B, B) =
        (tdz2.middleRows(j * B, B).array() * sp2.array()).matrix();
  }

  // a2 = Xx Wx1 + b ; ta2 = V Wx1.
  mmat(grad, wx1_, d_, D_) +=
      act.Xx.transpose() * da2 + tang.V.transpose() * tda2;
  mvec(grad, bx1_, D_) += da2.colwise().sum().transpose();

  if (!grad.allFinite())
    throw NumericError("ScoreModel::grad_params_dual: non-finite gradient");
  return grad;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

OptimizerState OptimizerState::init(const ScoreModel& model,
                                    const OptimizerConfig& cfg) {
  OptimizerState st;
  st.cfg = cfg;
  st.m = Eigen::VectorXd::Zero(model.param_count());
  st.v = Eigen::VectorXd::Zero(model.param_count());
  st.step = 0;
  return st;
}

double cosine_lr(const OptimizerConfig& cfg, long iter) {
  if (cfg.total_iters < 1)
    throw ConfigError("cosine_lr: total_iters must be >= 1");
  const double frac =
      static_cast<double>(iter) / static_cast<double>(cfg.total_iters);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(lie::kPi * frac));
}

void adamw_step(ScoreModel& model, OptimizerState& opt,
                const Eigen::VectorXd& grad) {
  if (grad.size() != model.param_count())
    throw ConfigError("adamw_step: gradient shape mismatch");
  const double lr = cosine_lr(opt.cfg, opt.step);
  opt.step += 1;
  const auto& c = opt.cfg;
  opt.m = c.beta1 * opt.m + (1.0 - c.beta1) * grad;
  opt.v = (c.beta2 * opt.v.array() +
           (1.0 - c.beta2) * grad.array().square())
              .matrix();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  Eigen::VectorXd& theta = model.params();
  theta.array() -=
      lr * ((opt.m.array() / bc1) /
                ((opt.v.array() / bc2).sqrt() + c.eps) +
            c.weight_decay * theta.array());
  if (!theta.allFinite())
    throw NumericError("adamw_step: non-finite parameters after update");
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace {

void write_blob(std::ofstream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_blob(std::ifstream& is, Eigen::VectorXd& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw IoError("checkpoint: truncated parameter blob");
}

}  // namespace

void save_checkpoint(const std::string& path, const ScoreModel& model,
                     const OptimizerState* opt, long iteration) {
  nlohmann::json header;
  header["format"] = "liegen-checkpoint-v1";
  header["kind"] = model.kind().tag();
  header["hidden_dim"] = model.hidden_dim();
  header["depth"] = model.depth();
  header["iteration"] = iteration;
  header["param_count"] = model.param_count();
  header["has_optimizer"] = (opt != nullptr);
  if (opt != nullptr) {
    header["opt"] = {{"base_lr", opt->cfg.base_lr},
                     {"weight_decay", opt->cfg.weight_decay},
                     {"total_iters", opt->cfg.total_iters},
                     {"beta1", opt->cfg.beta1},
                     {"beta2", opt->cfg.beta2},
                     {"eps", opt->cfg.eps},
                     {"step", opt->step}};
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
  os << header.dump() << '\n';
  write_blob(os, model.params());
  if (opt != nullptr) {
    write_blob(os, opt->m);
    write_blob(os, opt->v);
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw IoError("checkpoint: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "liegen-checkpoint-v1")
    throw IoError("checkpoint: unknown format tag");

  const lie::GroupKind kind =
      lie::GroupKind::parse(header.at("kind").get<std::string>());
  ScoreModel model(kind, header.at("hidden_dim").get<int>(),
                   header.at("depth").get<int>());
  if (model.param_count() != header.at("param_count").get<int>())
    throw IoError("checkpoint: parameter count mismatch");
  read_blob(is, model.params());

  Checkpoint ck{std::move(model), OptimizerState{}, false,
                header.at("iteration").get<long>()};
  ck.has_optimizer = header.value("has_optimizer", false);
  if (ck.has_optimizer) {
    const auto& jo = header.at("opt");
    OptimizerConfig cfg;
    cfg.base_lr = jo.at("base_lr").get<double>();
    cfg.weight_decay = jo.at("weight_decay").get<double>();
    cfg.total_iters = jo.at("total_iters").get<long>();
    cfg.beta1 = jo.at("beta1").get<double>();
    cfg.beta2 = jo.at("beta2").get<double>();
    cfg.eps = jo.at("eps").get<double>();
    ck.opt = OptimizerState::init(ck.model, cfg);
    ck.opt.step = jo.at("step").get<long>();
    read_blob(is, ck.opt.m);
    read_blob(is, ck.opt.v);
  }
  return ck;
}

// ---------------------------------------------------------------------------
// ScoreField adapter
// ---------------------------------------------------------------------------

NetScoreField::NetScoreField(const ScoreModel& model, int exact_threshold,
                             int probes, std::uint64_t probe_seed)
    : model_(model),
      exact_threshold_(exact_threshold),
      probes_(probes),
      probe_rng_(make_stream(probe_seed, 0x9e37, 0x79b9)) {}

Eigen::MatrixXd NetScoreField::score(const dyn::StateBatch& states,
                                     const Eigen::VectorXd& t) const {
  return model_.forward(states, t);
}

Eigen::VectorXd NetScoreField::divergence(const dyn::StateBatch& states,
                                          const Eigen::VectorXd& t) const {
  const Activations act = model_.forward_act(states, t);
  if (model_.algebra_dim() <= exact_threshold_)
    return model_.divergence_exact(act);
  return model_.divergence_hutchinson(act, probes_, probe_rng_);
}

}  // namespace liegen::net
