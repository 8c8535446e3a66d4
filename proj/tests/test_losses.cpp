// tests/test_losses.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "liegen/errors.hpp"
#include "liegen/losses.hpp"

namespace {

using liegen::Rng;
using liegen::dyn::StateBatch;
using liegen::lie::GroupElement;
using liegen::lie::GroupKind;
using liegen::lie::kPi;
using liegen::lie::kSqrt2;
namespace loss = liegen::loss;
namespace net = liegen::net;

/// Independent lattice oracle for the wrapped normal, wide fixed window.
double wn_oracle(double theta, double mean, double var) {
  double p = 0.0;
  for (int k = -30; k <= 30; ++k) {
    const double x = theta - mean + 2.0 * kPi * k;
    p += std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
  }
  return std::log(p);
}

double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * kPi * var) - d * d / (2.0 * var);
}

GroupElement torus_point(const GroupKind& kind,
                         const Eigen::VectorXd& angles) {
  GroupElement g = GroupElement::identity(kind);
  liegen::lie::right_multiply_exp(g, kSqrt2 * angles, 1.0);
  return g;
}

/// Log transition density of (xi_t, g_t) given (g0, xi0) for a torus power,
/// assembled in the test from scalar primitives only.
double transition_logpdf(const GroupElement& g0, const GroupElement& g_t,
                         const Eigen::VectorXd& xi0,
                         const Eigen::VectorXd& xi_t, double t,
                         double gamma) {
  const loss::ConditionalTransition c = loss::conditional_params(t, gamma);
  const Eigen::VectorXd theta = liegen::lie::torus_angles(
      liegen::lie::group_mul(liegen::lie::group_inv(g0), g_t));
  double lp = 0.0;
  for (int j = 0; j < xi0.size(); ++j) {
    lp += normal_logpdf(xi_t[j], c.decay * xi0[j], c.var_xi);
    const double mu_hat = c.mu_g_coeff * (xi_t[j] + xi0[j]) / kSqrt2;
    lp += wn_oracle(theta[j], mu_hat, c.var_g / 2.0);
  }
  return lp;
}

struct StationaryField final : liegen::dyn::ScoreField {
  Eigen::MatrixXd score(const StateBatch& states,
                        const Eigen::VectorXd&) const override {
    return -states.xi;
  }
  Eigen::VectorXd divergence(const StateBatch& states,
                             const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Constant(states.size(),
                                     -states.kind.algebra_dim());
  }
};

struct ZeroField final : liegen::dyn::ScoreField {
  Eigen::MatrixXd score(const StateBatch& states,
                        const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Zero(states.size(), states.kind.algebra_dim());
  }
  Eigen::VectorXd divergence(const StateBatch& states,
                             const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(states.size());
  }
};

}  // namespace

TEST_CASE("wrapped normal log-density") {
  CHECK_THROWS_AS(loss::wn_logpdf(0.1, 0.0, 0.0), liegen::ConfigError);
  CHECK_THROWS_AS(loss::wn_logpdf(0.1, 0.0, -1.0), liegen::ConfigError);

  SUBCASE("tight concentration matches the unwrapped normal") {
    const double wn = loss::wn_logpdf(0.25, 0.2, 0.01);
    CHECK(std::abs(wn - normal_logpdf(0.25, 0.2, 0.01)) < 1e-10);
    CHECK(wn == doctest::Approx(1.258646559789374).epsilon(1e-12));
  }

  SUBCASE("exactly 2 pi periodic in both arguments") {
    for (double var : {0.3, 4.0}) {
      const double base = loss::wn_logpdf(1.1, -0.4, var);
      CHECK(loss::wn_logpdf(1.1 + 2.0 * kPi, -0.4, var) == base);
      CHECK(loss::wn_logpdf(1.1 - 6.0 * kPi, -0.4, var) == base);
      CHECK(loss::wn_logpdf(1.1, -0.4 + 2.0 * kPi, var) ==
            doctest::Approx(base).epsilon(1e-13));
    }
  }

  SUBCASE("normalizes to one over the circle") {
    for (double var : {0.1, 1.0, 10.0}) {
      const int n = 20000;
      double integral = 0.0;
      for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * (i + 0.5) / n;
        integral += std::exp(loss::wn_logpdf(theta, 0.7, var));
      }
      integral *= 2.0 * kPi / n;
      CHECK(std::abs(integral - 1.0) < 1e-6);
    }
  }

  SUBCASE("large variance flattens to the uniform density") {
    const double uniform = -1.8378770664093453;  // log(1 / (2 pi))
    CHECK(std::abs(loss::wn_logpdf(0.3, 0.1, 100.0) - uniform) < 1e-6);
    CHECK(std::abs(loss::wn_logpdf(-2.9, 1.4, 100.0) - uniform) < 1e-6);
  }

  SUBCASE("agrees with the wide-window oracle at moderate variance") {
    for (double theta : {-3.0, -0.5, 0.9, 3.1}) {
      CHECK(loss::wn_logpdf(theta, 0.6, 2.5) ==
            doctest::Approx(wn_oracle(theta, 0.6, 2.5)).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional transition moments") {
  SUBCASE("pinned values at t = 1") {
    const loss::ConditionalTransition c = loss::conditional_params(1.0);
    CHECK(c.decay == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(c.var_xi == doctest::Approx(0.8646647167633873).epsilon(1e-15));
    CHECK(c.mu_g_coeff ==
          doctest::Approx(0.46211715726000974).epsilon(1e-15));
    CHECK(c.var_g == doctest::Approx(0.15153137095996083).epsilon(1e-13));
  }

  SUBCASE("friction rescales through the time change") {
    // gamma t invariant: same decay and var_xi, re-scaled displacement.
    const loss::ConditionalTransition c = loss::conditional_params(2.0, 0.5);
    CHECK(c.decay == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(c.var_xi == doctest::Approx(0.8646647167633873).epsilon(1e-15));
    CHECK(c.mu_g_coeff ==
          doctest::Approx(0.9242343145200195).epsilon(1e-15));
    CHECK(c.var_g == doctest::Approx(0.6061254838398433).epsilon(1e-13));
  }

  SUBCASE("short-time behavior") {
    const loss::ConditionalTransition c = loss::conditional_params(0.1);
    CHECK(c.decay == doctest::Approx(0.9048374180359595).epsilon(1e-15));
    CHECK(c.var_xi == doctest::Approx(0.18126924692201818).epsilon(1e-15));
    CHECK(c.mu_g_coeff ==
          doctest::Approx(0.049958374957880004).epsilon(1e-13));
    CHECK(c.var_g == doctest::Approx(0.0001665001684800771).epsilon(1e-10));
    // The series branch joins the closed form continuously: var_g ~ t^3/6.
    const double lo = loss::conditional_params(9.99e-4).var_g;
    const double hi = loss::conditional_params(1.001e-3).var_g;
    CHECK(std::abs(lo / hi - std::pow(9.99e-4 / 1.001e-3, 3)) < 1e-4);
  }

  SUBCASE("rejects non-positive times and frictions") {
    CHECK_THROWS_AS(loss::conditional_params(0.0), liegen::ConfigError);
    CHECK_THROWS_AS(loss::conditional_params(-1.0), liegen::ConfigError);
    CHECK_THROWS_AS(loss::conditional_params(1.0, 0.0),
                    liegen::ConfigError);
  }
}

TEST_CASE("denoising target") {
  const GroupKind t2 = GroupKind::torus(2);
  Rng rng = liegen::make_stream(101);

  SUBCASE("matches the gradient of the assembled transition log-density") {
    for (double t : {0.3, 0.8, 2.5}) {
      Eigen::VectorXd a0(2), xi0(2), xi_t(2), y(2);
      liegen::fill_gaussian(rng, a0);
      liegen::fill_gaussian(rng, xi0);
      liegen::fill_gaussian(rng, xi_t);
      liegen::fill_gaussian(rng, y);
      const GroupElement g0 = torus_point(t2, a0);
      GroupElement g_t = g0;
      liegen::lie::right_multiply_exp(g_t, 1.7 * y, 1.0);

      const Eigen::VectorXd target =
          loss::dsm_target(g0, g_t, xi0, xi_t, t, 1.0);
      for (int j = 0; j < 2; ++j) {
        const double h = 1e-6;
        Eigen::VectorXd xp = xi_t, xm = xi_t;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (transition_logpdf(g0, g_t, xi0, xp, t, 1.0) -
                           transition_logpdf(g0, g_t, xi0, xm, t, 1.0)) /
                          (2.0 * h);
        CHECK(std::abs(fd - target[j]) <=
              1e-6 * std::max(1.0, std::abs(target[j])));
      }
    }
  }

  SUBCASE("the lattice pull vanishes exactly at the conditional mean") {
    const loss::ConditionalTransition c = loss::conditional_params(1.0);
    Eigen::VectorXd xi0(2), xi_t(2);
    xi0 << 0.4, -1.1;
    xi_t << -0.2, 0.7;
    // Place the displacement angle exactly at its conditional mean.
    const Eigen::VectorXd mu_angle =
        (c.mu_g_coeff / kSqrt2) * (xi_t + xi0);
    const GroupElement g0 = torus_point(t2, Eigen::Vector2d(0.3, -0.8));
    GroupElement g_t = g0;
    liegen::lie::right_multiply_exp(g_t, kSqrt2 * mu_angle, 1.0);
    const Eigen::VectorXd target =
        loss::dsm_target(g0, g_t, xi0, xi_t, 1.0, 1.0);
    const Eigen::VectorXd momentum_only =
        (c.decay * xi0 - xi_t) / c.var_xi;
    CHECK((target - momentum_only).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("the displacement term matters away from the mean") {
    Eigen::VectorXd xi0(2), xi_t(2);
    xi0 << 0.4, -1.1;
    xi_t << -0.2, 0.7;
    const GroupElement g0 = torus_point(t2, Eigen::Vector2d(0.3, -0.8));
    GroupElement g_t = g0;
    liegen::lie::right_multiply_exp(g_t, Eigen::Vector2d(1.3, -0.5), 1.0);
    const loss::ConditionalTransition c = loss::conditional_params(1.0);
    const Eigen::VectorXd target =
        loss::dsm_target(g0, g_t, xi0, xi_t, 1.0, 1.0);
    const Eigen::VectorXd momentum_only =
        (c.decay * xi0 - xi_t) / c.var_xi;
    CHECK((target - momentum_only).cwiseAbs().maxCoeff() > 0.1);
  }

  SUBCASE("long horizons forget the data: target -> -xi_t") {
    Eigen::VectorXd xi0(2), xi_t(2);
    xi0 << 1.3, -0.6;
    xi_t << -0.9, 0.25;
    const GroupElement g0 = torus_point(t2, Eigen::Vector2d(0.3, -0.8));
    GroupElement g_t = torus_point(t2, Eigen::Vector2d(-2.0, 1.4));
    const Eigen::VectorXd target =
        loss::dsm_target(g0, g_t, xi0, xi_t, 40.0, 1.0);
    // The wrap term decays like exp(-var_g/4) ~ 6e-9; allow its remnant.
    CHECK((target + xi_t).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("coordinates factorize across the torus power") {
    const GroupKind t1 = GroupKind::torus(1);
    Eigen::VectorXd xi0(2), xi_t(2);
    xi0 << 0.9, -0.3;
    xi_t << -0.5, 1.2;
    const Eigen::Vector2d a0(0.4, -0.9), at(1.0, 2.2);
    const Eigen::VectorXd joint = loss::dsm_target(
        torus_point(t2, a0), torus_point(t2, at), xi0, xi_t, 0.7, 1.0);
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd one = loss::dsm_target(
          torus_point(t1, a0.segment(j, 1)),
          torus_point(t1, at.segment(j, 1)), xi0.segment(j, 1),
          xi_t.segment(j, 1), 0.7, 1.0);
      CHECK(one[0] == doctest::Approx(joint[j]).epsilon(1e-14));
    }
  }

  SUBCASE("rejects non-abelian kinds") {
    const GroupKind so3 = GroupKind::special_orthogonal(3);
    Rng r2 = liegen::make_stream(5);
    const GroupElement g = liegen::lie::haar_sample(so3, r2);
    const Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(loss::dsm_target(g, g, v, v, 1.0, 1.0),
                    liegen::ConfigError);
    CHECK_THROWS_AS(loss::dsm_sample(g, 1.0, 1.0, r2),
                    liegen::ConfigError);
  }
}

TEST_CASE("denoising sampler") {
  const GroupKind t1 = GroupKind::torus(1);
  const GroupElement g0 =
      torus_point(t1, Eigen::VectorXd::Constant(1, 0.3));

  SUBCASE("short times stay near the data point") {
    Rng rng = liegen::make_stream(102);
    for (int i = 0; i < 50; ++i) {
      const loss::DsmDraw draw = loss::dsm_sample(g0, 1e-6, 1.0, rng);
      CHECK((draw.xi_t - draw.xi0).cwiseAbs().maxCoeff() < 1e-2);
      const double theta = liegen::lie::torus_angles(liegen::lie::group_mul(
          liegen::lie::group_inv(g0), draw.g_t))[0];
      CHECK(std::abs(theta) < 1e-4);
    }
  }

  SUBCASE("matches an independent discretization of the forward dynamics") {
    // Scalar splitting of the same kinetic SDE at h = 1e-3, in coefficient
    // units:  xi <- e^{-h} xi + sqrt(1 - e^{-2h}) z,   y <- y + h xi.
    // Both sides reduce angles identically, so every joint statistic of the
    // wrapped pair must agree; first and second moments within 1%.
    const int n = 400000;
    const double t_end = 1.0;
    const int steps = 1000;
    const double h = t_end / steps;
    const double damp = std::exp(-h);
    const double noise = std::sqrt(-std::expm1(-2.0 * h));

    Rng sim_rng = liegen::make_stream(103);
    std::normal_distribution<double> gauss;
    Eigen::ArrayXd sim_theta(n), sim_xi(n);
    for (int i = 0; i < n; ++i) {
      double xi = gauss(sim_rng);
      double y = 0.0;
      for (int s = 0; s < steps; ++s) {
        xi = damp * xi + noise * gauss(sim_rng);
        y += h * xi;
      }
      sim_theta[i] = std::remainder(y / kSqrt2, 2.0 * kPi);  // angle units
      sim_xi[i] = xi;
    }

    Rng dsm_rng = liegen::make_stream(104);
    Eigen::ArrayXd dsm_theta(n), dsm_xi(n);
    for (int i = 0; i < n; ++i) {
      const loss::DsmDraw draw = loss::dsm_sample(g0, t_end, 1.0, dsm_rng);
      dsm_theta[i] = liegen::lie::torus_angles(liegen::lie::group_mul(
          liegen::lie::group_inv(g0), draw.g_t))[0];
      dsm_xi[i] = draw.xi_t[0];
    }

    auto within = [&](const Eigen::ArrayXd& a, const Eigen::ArrayXd& b,
                      double frac) {
      const double ma = a.mean(), mb = b.mean();
      CHECK(std::abs(ma - mb) <= frac * std::max(1.0, std::abs(ma)));
    };
    // First moments.
    within(sim_theta, dsm_theta, 0.01);
    within(sim_xi, dsm_xi, 0.01);
    // Second moments.
    within(sim_theta.square(), dsm_theta.square(), 0.01);
    within(sim_xi.square(), dsm_xi.square(), 0.01);
    within(sim_xi * sim_theta, dsm_xi * dsm_theta, 0.01);
    // Circular statistics, under the same bound.
    within(sim_theta.cos(), dsm_theta.cos(), 0.01);
    within(sim_xi * sim_theta.sin(), dsm_xi * dsm_theta.sin(), 0.01);
  }

  SUBCASE("long times forget the data angle: uniform histogram") {
    Rng rng = liegen::make_stream(105);
    const int n = 24000, bins = 24;
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(bins);
    for (int i = 0; i < n; ++i) {
      const loss::DsmDraw draw = loss::dsm_sample(g0, 10.0, 1.0, rng);
      const double theta = liegen::lie::torus_angles(draw.g_t)[0];
      int b = static_cast<int>((theta + kPi) / (2.0 * kPi) * bins);
      b = std::min(std::max(b, 0), bins - 1);
      counts[b] += 1;
    }
    const double expected = static_cast<double>(n) / bins;
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double d = counts[b] - expected;
      chi2 += d * d / expected;
    }
    CHECK(chi2 < 49.7282324664315);  // df 23, far tail
  }
}

TEST_CASE("denoising loss") {
  const GroupKind t2 = GroupKind::torus(2);
  Rng rng = liegen::make_stream(106);
  std::vector<GroupElement> data;
  for (int i = 0; i < 3; ++i)
    data.push_back(liegen::lie::haar_sample(t2, rng));

  SUBCASE("zero residual means zero loss, exactly") {
    Eigen::MatrixXd s(4, 2);
    liegen::fill_gaussian(rng, s);
    CHECK(loss::mean_squared_residual(s, s) == 0.0);
    Eigen::MatrixXd other = s;
    other(1, 1) += 0.5;
    CHECK(loss::mean_squared_residual(s, other) ==
          doctest::Approx(0.25 / 4.0).epsilon(1e-15));
  }

  SUBCASE("batch construction covers the requested time range") {
    loss::DsmConfig cfg;
    cfg.horizon_T = 6.0;
    const loss::DsmBatch batch = loss::make_dsm_batch(data, 32, cfg, rng);
    REQUIRE(batch.states.size() == 32);
    REQUIRE(batch.tau.size() == 32);
    REQUIRE(batch.target.rows() == 32);
    for (int i = 0; i < 32; ++i) {
      CHECK(batch.tau[i] >= 0.0);
      CHECK(batch.tau[i] <= 6.0 * (1.0 - cfg.t_floor_frac));
      CHECK(liegen::lie::is_on_group(
          liegen::lie::GroupElement{t2, batch.states.g[i]}, 1e-10));
    }
  }

  SUBCASE("gradient matches central differences on a frozen batch") {
    net::ScoreModel model(t2, 16, 2);
    model.init_params(rng);
    model.params().array() += 0.02;
    loss::DsmConfig cfg;
    const loss::DsmBatch batch = loss::make_dsm_batch(data, 8, cfg, rng);
    const loss::LossValue lv = loss::dsm_loss(model, batch);
    CHECK(std::isfinite(lv.value));
    CHECK(lv.value > 0.0);

    std::uniform_int_distribution<int> pick(0, model.param_count() - 1);
    const double scale = lv.grad.cwiseAbs().maxCoeff();
    int checked = 0;
    while (checked < 6) {
      const int i = pick(rng);
      if (std::abs(lv.grad[i]) < 1e-2 * scale) continue;
      net::ScoreModel mp = model, mm = model;
      const double h = 1e-5;
      mp.params()[i] += h;
      mm.params()[i] -= h;
      const double fd =
          (loss::dsm_loss(mp, batch).value - loss::dsm_loss(mm, batch).value) /
          (2.0 * h);
      CHECK(std::abs(fd - lv.grad[i]) <= 1e-6 * std::abs(lv.grad[i]));
      ++checked;
    }
  }
}

TEST_CASE("implicit score matching") {
  SUBCASE("the zero field scores exactly zero") {
    const GroupKind so3 = GroupKind::special_orthogonal(3);
    Rng rng = liegen::make_stream(107);
    const StateBatch states =
        liegen::dyn::sample_prior_batch(so3, 64, rng);
    const ZeroField zero;
    CHECK(loss::ism_objective(zero, states,
                              Eigen::VectorXd::Ones(64)) == 0.0);
  }

  SUBCASE("the stationary field scores -d under the prior") {
    const GroupKind so3 = GroupKind::special_orthogonal(3);
    Rng rng = liegen::make_stream(108);
    const int n = 100000;
    const StateBatch states = liegen::dyn::sample_prior_batch(so3, n, rng);
    const StationaryField stat;
    const double value =
        loss::ism_objective(stat, states, Eigen::VectorXd::Ones(n));
    // value = mean ||xi||^2 - 2 d; Var(||xi||^2) = 2d.
    const double se = std::sqrt(2.0 * 3.0 / n);
    CHECK(std::abs(value - (-3.0)) <= 3.0 * se);
  }

  SUBCASE("network losses: exact path agrees with the field adapter") {
    const GroupKind t2 = GroupKind::torus(2);
    net::ScoreModel model(t2, 16, 2);
    Rng rng = liegen::make_stream(109);
    model.init_params(rng);
    model.params().array() += 0.05;
    const StateBatch states = liegen::dyn::sample_prior_batch(t2, 32, rng);
    const Eigen::VectorXd tau = Eigen::VectorXd::Constant(32, 1.3);

    const loss::LossValue lv = loss::ism_loss_exact(model, states, tau);
    const net::NetScoreField field(model);
    CHECK(lv.value ==
          doctest::Approx(loss::ism_objective(field, states, tau))
              .epsilon(1e-12));

    loss::IsmConfig cfg;  // threshold 16 >= d = 2 -> exact dispatch
    Rng r2 = liegen::make_stream(110);
    const loss::LossValue dispatched =
        loss::ism_loss(model, states, tau, cfg, r2);
    CHECK(dispatched.value == lv.value);
    CHECK((dispatched.grad - lv.grad).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hutchinson loss converges to the exact loss") {
    const GroupKind t2 = GroupKind::torus(2);
    net::ScoreModel model(t2, 16, 2);
    Rng rng = liegen::make_stream(111);
    model.init_params(rng);
    model.params().array() += 0.05;
    const int b = 64;
    const StateBatch states = liegen::dyn::sample_prior_batch(t2, b, rng);
    const Eigen::VectorXd tau = Eigen::VectorXd::Constant(b, 0.9);

    const double exact = loss::ism_loss_exact(model, states, tau).value;
    const int q = 1000;
    Eigen::MatrixXd probes(q * b, 2);
    liegen::fill_rademacher(rng, probes);
    const double noisy =
        loss::ism_loss_hutchinson(model, states, tau, probes).value;

    // Bound the deviation by the aggregated per-sample estimator variance,
    // computed from the actual 2x2 Jacobians.
    double var_sum = 0.0;
    for (int i = 0; i < b; ++i) {
      StateBatch one;
      one.kind = t2;
      one.g.push_back(states.g[i]);
      one.xi = states.xi.row(i);
      const net::Activations act =
          model.forward_act(one, tau.segment(i, 1));
      Eigen::MatrixXd jac(2, 2);
      for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(1, 2);
        v(0, j) = 1.0;
        jac.col(j) = model.jvp_act(act, v).tout.row(0).transpose();
      }
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          if (r != c) var_sum += jac(r, c) * (jac(r, c) + jac(c, r));
    }
    // value deviation = (2/b) sum_i (est_i - div_i)
    const double se = 2.0 / b * std::sqrt(var_sum / q);
    CHECK(std::abs(noisy - exact) <= 4.0 * se + 1e-12);
  }

  SUBCASE("gradients match central differences") {
    const GroupKind so3 = GroupKind::special_orthogonal(3);
    net::ScoreModel model(so3, 16, 2);
    Rng rng = liegen::make_stream(112);
    model.init_params(rng);
    model.params().array() += 0.04;
    const int b = 2;
    const StateBatch states = liegen::dyn::sample_prior_batch(so3, b, rng);
    const Eigen::VectorXd tau = Eigen::VectorXd::Constant(b, 0.6);

    const loss::LossValue lv = loss::ism_loss_exact(model, states, tau);
    Eigen::MatrixXd probes(2 * b, 3);
    liegen::fill_rademacher(rng, probes);
    const loss::LossValue lh =
        loss::ism_loss_hutchinson(model, states, tau, probes);

    std::uniform_int_distribution<int> pick(0, model.param_count() - 1);
    int checked = 0;
    while (checked < 4) {
      const int i = pick(rng);
      if (std::abs(lv.grad[i]) < 1e-2 * lv.grad.cwiseAbs().maxCoeff())
        continue;
      net::ScoreModel mp = model, mm = model;
      const double h = 1e-5;
      mp.params()[i] += h;
      mm.params()[i] -= h;
      const double fd_exact = (loss::ism_loss_exact(mp, states, tau).value -
                               loss::ism_loss_exact(mm, states, tau).value) /
                              (2.0 * h);
      CHECK(std::abs(fd_exact - lv.grad[i]) <=
            1e-5 * std::max(1e-3, std::abs(lv.grad[i])));
      const double fd_hutch =
          (loss::ism_loss_hutchinson(mp, states, tau, probes).value -
           loss::ism_loss_hutchinson(mm, states, tau, probes).value) /
          (2.0 * h);
      CHECK(std::abs(fd_hutch - lh.grad[i]) <=
            1e-5 * std::max(1e-3, std::abs(lh.grad[i])));
      ++checked;
    }
  }
}

TEST_CASE("denoising and implicit estimators close under integration by "
          "parts") {
  // For states drawn from the forward transition at a fixed time, the
  // per-sample statistic  s . target + div s  has mean zero for any network:
  // both losses estimate the same objective up to a parameter-free constant.
  const GroupKind t1 = GroupKind::torus(1);
  Rng rng = liegen::make_stream(113);
  std::vector<GroupElement> data;
  for (int i = 0; i < 3; ++i)
    data.push_back(liegen::lie::haar_sample(t1, rng));

  const double t = 1.2, horizon = 6.0;
  const int n = 4096;

  StateBatch states;
  states.kind = t1;
  states.g.reserve(n);
  states.xi.resize(n, 1);
  Eigen::MatrixXd target(n, 1);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  for (int i = 0; i < n; ++i) {
    const loss::DsmDraw draw = loss::dsm_sample(data[pick(rng)], t, 1.0, rng);
    states.g.push_back(draw.g_t.mat);
    states.xi(i, 0) = draw.xi_t[0];
    target(i, 0) = draw.target[0];
  }
  const Eigen::VectorXd tau = Eigen::VectorXd::Constant(n, horizon - t);

  std::vector<Eigen::ArrayXd> stats;
  for (std::uint64_t model_seed : {201ull, 202ull}) {
    net::ScoreModel model(t1, 16, 2);
    Rng mrng = liegen::make_stream(model_seed);
    model.init_params(mrng);
    model.params().array() += 0.1;

    const net::Activations act = model.forward_act(states, tau);
    const Eigen::VectorXd div = model.divergence_exact(act);
    const Eigen::ArrayXd stat =
        (act.out.array() * target.array()).rowwise().sum() + div.array();
    const double mean = stat.mean();
    const double se = std::sqrt((stat - mean).square().mean() / n);
    CHECK(std::abs(mean) <= 4.0 * se);
    CHECK(se < 1.0);  // sanity: the statistic is not degenerate
    stats.push_back(stat);
  }

  // Paired form: the implicit and denoising objectives differ per sample by
  //   ism_i - dsm_i = 2 (s . target + div s) - ||target||^2,
  // whose last term is parameter-free, so the double difference across two
  // parameter vectors has mean zero within Monte Carlo error.
  const Eigen::ArrayXd delta = 2.0 * (stats[0] - stats[1]);
  const double dmean = delta.mean();
  const double dse = std::sqrt((delta - dmean).square().mean() / n);
  CHECK(std::abs(dmean) <= 3.0 * dse);
}

TEST_CASE("training driver") {
  const GroupKind t1 = GroupKind::torus(1);
  Rng rng = liegen::make_stream(114);
  std::vector<GroupElement> data;
  for (int i = 0; i < 4; ++i)
    data.push_back(liegen::lie::haar_sample(t1, rng));

  SUBCASE("loss kind resolution and validation") {
    loss::TrainConfig cfg(t1);
    CHECK(cfg.resolved_loss() == loss::LossKind::kDsm);
    loss::TrainConfig cfg_so(GroupKind::special_orthogonal(3));
    CHECK(cfg_so.resolved_loss() == loss::LossKind::kIsm);
    CHECK(cfg_so.resolved_hidden_dim() == 256);
    CHECK(loss::TrainConfig(GroupKind::unitary(4)).resolved_hidden_dim() ==
          512);

    cfg_so.loss = loss::LossKind::kDsm;
    CHECK_THROWS_AS(loss::train(cfg_so, {}), liegen::ConfigError);

    loss::TrainConfig bad(t1);
    bad.batch = 0;
    CHECK_THROWS_AS(loss::train(bad, data), liegen::ConfigError);
    loss::TrainConfig empty(t1);
    empty.iters = 1;
    CHECK_THROWS_AS(loss::train(empty, {}), liegen::ConfigError);
  }

  SUBCASE("zero iterations leave the initialization untouched") {
    loss::TrainConfig cfg(t1);
    cfg.iters = 0;
    cfg.hidden_dim = 8;
    cfg.depth = 1;
    const loss::TrainResult r1 = loss::train(cfg, data);
    const loss::TrainResult r2 = loss::train(cfg, data);
    CHECK(r1.iterations_run == 0);
    CHECK((r1.model.params() - r2.model.params()).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(r1.opt.step == 0);
  }

  SUBCASE("deterministic, resumable, and file-complete") {
    const std::string dir_a = "train_a_out";
    const std::string dir_b = "train_b_out";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    loss::TrainConfig cfg(t1);
    cfg.hidden_dim = 8;
    cfg.depth = 1;
    cfg.iters = 40;
    cfg.batch = 8;
    cfg.horizon_T = 4.0;
    cfg.seed = 9;
    cfg.log_every = 10;
    cfg.checkpoint_every = 20;
    cfg.out_dir = dir_a;
    const loss::TrainResult full = loss::train(cfg, data);
    CHECK(full.used_loss == loss::LossKind::kDsm);
    CHECK(full.iterations_run == 40);
    CHECK(std::isfinite(full.final_loss));

    // The mid-run checkpoint restarts into a bitwise-identical tail.
    const net::Checkpoint mid =
        net::load_checkpoint(dir_a + "/checkpoint_20.bin");
    CHECK(mid.iteration == 20);
    cfg.out_dir = dir_b;
    const loss::TrainResult resumed = loss::train(cfg, data, &mid);
    CHECK(resumed.iterations_run == 20);
    CHECK((resumed.model.params() - full.model.params())
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((resumed.opt.m - full.opt.m).cwiseAbs().maxCoeff() == 0.0);
    CHECK((resumed.opt.v - full.opt.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK(resumed.opt.step == full.opt.step);

    // Final checkpoints of both runs hold identical parameters.
    const net::Checkpoint fa =
        net::load_checkpoint(dir_a + "/checkpoint_final.bin");
    const net::Checkpoint fb =
        net::load_checkpoint(dir_b + "/checkpoint_final.bin");
    CHECK((fa.model.params() - fb.model.params()).cwiseAbs().maxCoeff() ==
          0.0);

    // Loss CSV: header plus rows at the logging cadence.
    std::ifstream csv(dir_a + "/loss.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "iteration,wall_time_s,loss,lr");
    int rows = 0;
    while (std::getline(csv, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 5);  // iterations 0, 10, 20, 30, 39

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
  }

  SUBCASE("implicit-loss training runs on a curved kind") {
    const GroupKind so3 = GroupKind::special_orthogonal(3);
    Rng r2 = liegen::make_stream(115);
    std::vector<GroupElement> so_data;
    for (int i = 0; i < 4; ++i)
      so_data.push_back(liegen::lie::haar_sample(so3, r2));

    loss::TrainConfig cfg(so3);
    cfg.hidden_dim = 8;
    cfg.depth = 1;
    cfg.iters = 10;
    cfg.batch = 8;
    cfg.steps_N = 4;
    cfg.horizon_T = 2.0;
    const loss::TrainResult r = loss::train(cfg, so_data);
    CHECK(r.used_loss == loss::LossKind::kIsm);
    CHECK(std::isfinite(r.final_loss));
    CHECK(r.opt.step == 10);
  }

  SUBCASE("a single datum is memorized: loss drops tenfold") {
    // The target's conditional variance given the state is an irreducible
    // loss floor concentrated at small times; a long horizon dilutes it so
    // that a tenfold drop is attainable (the exact score achieves ~24x at
    // T = 40, versus ~8x at T = 10 where no model could reach 10x).
    std::vector<GroupElement> one{
        torus_point(t1, Eigen::VectorXd::Constant(1, 1.0))};
    net::ScoreModel model(t1, 24, 2);
    Rng mrng = liegen::make_stream(116);
    model.init_params(mrng);
    net::OptimizerConfig ocfg;
    ocfg.base_lr = 2e-3;
    ocfg.total_iters = 5000;
    net::OptimizerState opt = net::OptimizerState::init(model, ocfg);

    loss::DsmConfig dcfg;
    dcfg.horizon_T = 40.0;

    const auto eval_loss = [&](const net::ScoreModel& m, std::uint64_t tag) {
      double acc = 0.0;
      const int reps = 100;
      for (int r = 0; r < reps; ++r) {
        Rng er = liegen::make_stream(tag, r);
        const loss::DsmBatch batch = loss::make_dsm_batch(one, 64, dcfg, er);
        acc += loss::mean_squared_residual(
                   m.forward(batch.states, batch.tau), batch.target) /
               reps;
      }
      return acc;
    };

    const double init_loss = eval_loss(model, 900);
    for (int it = 0; it < 5000; ++it) {
      Rng r = liegen::make_stream(117, it);
      const loss::DsmBatch batch = loss::make_dsm_batch(one, 64, dcfg, r);
      const loss::LossValue lv = loss::dsm_loss(model, batch);
      net::adamw_step(model, opt, lv.grad);
    }
    const double final_loss = eval_loss(model, 900);
    CHECK(final_loss * 10.0 <= init_loss);
  }
}
