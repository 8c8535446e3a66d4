// tests/test_dynamics.cpp

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

#include <json.hpp>

#include "liegen/dynamics.hpp"
#include "liegen/serialize.hpp"
#include "oracles.hpp"

using namespace liegen;
using dyn::DiffusionConfig;
using dyn::PhaseState;
using dyn::StateBatch;
using lie::GroupKind;
using lie::Matrix;
using lie::Vector;

namespace {

struct ZeroScore final : dyn::ScoreField {
  Eigen::MatrixXd score(const StateBatch& sb,
                        const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Zero(sb.size(), sb.kind.algebra_dim());
  }
};

struct ConstantScore final : dyn::ScoreField {
  explicit ConstantScore(Vector c) : c_(std::move(c)) {}
  Eigen::MatrixXd score(const StateBatch& sb,
                        const Eigen::VectorXd&) const override {
    return c_.transpose().replicate(sb.size(), 1);
  }
  Vector c_;
};

// Negative momentum: the stationary score of the invariant law.
struct StationaryScore final : dyn::ScoreField {
  Eigen::MatrixXd score(const StateBatch& sb,
                        const Eigen::VectorXd&) const override {
    return -sb.xi;
  }
};

// Exact momentum score for data concentrated at xi = 0 with uniform g:
// at model time tau the forward marginal is N(0, 1 - e^{-2(T - tau)}), so
// s(xi, tau) = -xi / (1 - e^{-2 gamma (T - tau)}).
struct OuExactScore final : dyn::ScoreField {
  OuExactScore(double T, double gamma) : T_(T), gamma_(gamma) {}
  Eigen::MatrixXd score(const StateBatch& sb,
                        const Eigen::VectorXd& t) const override {
    Eigen::MatrixXd out = sb.xi;
    for (int i = 0; i < sb.size(); ++i) {
      const double var = 1.0 - std::exp(-2.0 * gamma_ * (T_ - t[i]));
      out.row(i) = -sb.xi.row(i) / var;
    }
    return out;
  }
  double T_, gamma_;
};

DiffusionConfig torus_cfg(int k = 1) {
  DiffusionConfig cfg;
  cfg.kind = GroupKind::torus(k);
  return cfg;
}

PhaseState identity_state(const GroupKind& kind, const Vector& xi) {
  return PhaseState{lie::GroupElement::identity(kind),
                    lie::AlgebraVector{kind, xi}};
}

}  // namespace

TEST_CASE("config validation") {
  DiffusionConfig cfg = torus_cfg();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.h() == doctest::Approx(10.0 / 500));

  DiffusionConfig bad = cfg;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.steps_N = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.eps_early_stop = cfg.horizon_T;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.eps_early_stop = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fosi noise-free sub-flows are exact") {
  Rng rng = make_stream(21, 1);
  for (const auto& kind :
       {GroupKind::torus(2), GroupKind::special_orthogonal(3)}) {
    DiffusionConfig cfg;
    cfg.kind = kind;
    cfg.gamma = 1.0;
    const double h = 0.1;
    Vector xi(kind.algebra_dim());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = gaussian(rng);
    const Vector zero = Vector::Zero(kind.algebra_dim());

    // From the identity: g' = expm(h e^{-gamma h} xi).
    const PhaseState out =
        dyn::fosi_step_with_noise(identity_state(kind, xi), cfg, h, zero);
    const double decay = std::exp(-cfg.gamma * h);
    CHECK((out.xi.coeffs - decay * xi).norm() < 1e-15);
    const Matrix expected = lie::exp_from_coeffs(kind, xi, h * decay);
    CHECK((out.g.mat - expected).norm() < 1e-12);

    // From a generic point: left factor carried along.
    const lie::GroupElement g0 = lie::haar_sample(kind, rng);
    const PhaseState out2 = dyn::fosi_step_with_noise(
        PhaseState{g0, lie::AlgebraVector{kind, xi}}, cfg, h, zero);
    CHECK((out2.g.mat - g0.mat * expected).norm() < 1e-12);
  }
}

TEST_CASE("fosi momentum decay and noise scale at gamma=1, h=0.1") {
  const GroupKind kind = GroupKind::torus(1);
  DiffusionConfig cfg = torus_cfg();
  const double h = 0.1;

  // Decay factor e^{-0.1}.
  Vector one = Vector::Ones(1);
  const PhaseState out = dyn::fosi_step_with_noise(
      identity_state(kind, one), cfg, h, Vector::Zero(1));
  CHECK(out.xi.coeffs[0] ==
        doctest::Approx(0.9048374180359595).epsilon(1e-14));

  // Noise standard deviation sqrt(1 - e^{-0.2}) = 0.425757262911648.
  Rng rng = make_stream(21, 2);
  const int n = 40000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const PhaseState s = dyn::fosi_step(
        identity_state(kind, Vector::Zero(1)), cfg, h, rng);
    sum += s.xi.coeffs[0];
    sumsq += s.xi.coeffs[0] * s.xi.coeffs[0];
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(stddev - 0.425757262911648) < 0.005);
  CHECK(std::abs(mean) < 3.0 * 0.4258 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fosi with huge gamma*h forgets the momentum") {
  const GroupKind kind = GroupKind::torus(2);
  DiffusionConfig cfg = torus_cfg(2);
  Rng rng = make_stream(21, 3);
  const int n = 10000;
  Vector init(2);
  init << 50.0, -75.0;  // far from stationarity
  Eigen::MatrixXd xs(n, 2);
  for (int i = 0; i < n; ++i)
    xs.row(i) =
        dyn::fosi_step(identity_state(kind, init), cfg, 500.0, rng)
            .xi.coeffs.transpose();
  for (int j = 0; j < 2; ++j) {
    const double mean = xs.col(j).mean();
    const double var = (xs.col(j).array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
  }
}

TEST_CASE("fosi_trajectory bookkeeping and manifold preservation") {
  Rng rng = make_stream(21, 4);
  DiffusionConfig cfg;
  cfg.kind = GroupKind::special_orthogonal(3);
  cfg.horizon_T = 10.0;
  cfg.steps_N = 1000;

  // steps_N = 0 is the degenerate init-only trajectory.
  DiffusionConfig cfg0 = cfg;
  cfg0.steps_N = 0;
  const PhaseState init = dyn::sample_prior(cfg, rng);
  const dyn::Trajectory t0 = dyn::fosi_trajectory(init, cfg0, rng);
  REQUIRE(t0.states.size() == 1);
  CHECK((t0.states[0].g.mat - init.g.mat).norm() == 0.0);

  const dyn::Trajectory traj = dyn::fosi_trajectory(init, cfg, rng);
  REQUIRE(traj.states.size() == 1001);
  REQUIRE(traj.times.size() == 1001);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(10.0).epsilon(1e-12));
  for (int n : {100, 500, 1000}) {
    CHECK(lie::is_on_group(traj.states[n].g, 1e-8));
  }
}

TEST_CASE("fosi ergodicity on the circle") {
  // T = 10 with 10^4 chains: momentum variance 1 +- 0.05 and uniform angles.
  DiffusionConfig cfg = torus_cfg(1);
  cfg.horizon_T = 10.0;
  cfg.steps_N = 100;
  Rng rng = make_stream(21, 5);
  const int chains = 10000;

  StateBatch init{cfg.kind, {}, Eigen::MatrixXd::Zero(chains, 1)};
  init.g.assign(chains, lie::GroupElement::identity(cfg.kind).mat);
  const std::vector<StateBatch> traj = dyn::fosi_trajectory_batch(init, cfg, rng);
  const StateBatch& last = traj.back();

  const double mean = last.xi.col(0).mean();
  const double var =
      (last.xi.col(0).array() - mean).square().sum() / (chains - 1);
  CHECK(std::abs(var - 1.0) < 0.05);

  const int bins = 24;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < chains; ++i) {
    const double a =
        lie::torus_angles(lie::GroupElement{cfg.kind, last.g[i]})[0];
    int b = static_cast<int>((a + lie::kPi) / (2.0 * lie::kPi) * bins);
    counts[std::min(std::max(b, 0), bins - 1)]++;
  }
  const double expected = static_cast<double>(chains) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // p > 0.01 at 23 degrees of freedom: chi2 below the 0.99 quantile.
  CHECK(chi2 < 41.638398118858476);
}

TEST_CASE("fosi mixes SO(3) to Haar") {
  DiffusionConfig cfg;
  cfg.kind = GroupKind::special_orthogonal(3);
  cfg.horizon_T = 10.0;
  cfg.steps_N = 100;
  Rng rng = make_stream(21, 6);
  const int chains = 10000;

  StateBatch init{cfg.kind, {}, Eigen::MatrixXd::Zero(chains, 3)};
  init.g.assign(chains, lie::GroupElement::identity(cfg.kind).mat);
  const StateBatch last = dyn::fosi_trajectory_batch(init, cfg, rng).back();

  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < chains; ++i) {
    const double tr = last.g[i].trace().real();
    sum += tr;
    sumsq += tr * tr;
  }
  const double mean = sum / chains;
  const double se =
      std::sqrt((sumsq / chains - mean * mean) / (chains - 1.0));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("bsoi noise-free sub-flows and score coefficient") {
  Rng rng = make_stream(21, 7);
  const GroupKind kind = GroupKind::special_orthogonal(3);
  DiffusionConfig cfg;
  cfg.kind = kind;
  const double h = 0.1;
  Vector xi(3);
  xi << 0.4, -1.2, 0.7;
  const Vector zero = Vector::Zero(3);
  const lie::GroupElement g0 = lie::haar_sample(kind, rng);
  const PhaseState state{g0, lie::AlgebraVector{kind, xi}};

  // Zero score: xi' = e^{gamma h} xi, g' = g expm(-h xi').
  const ZeroScore zs;
  const PhaseState out = dyn::bsoi_step_with_noise(state, zs, 1.0, cfg, h, zero);
  const double amp = 1.1051709180756477;  // e^{0.1}
  CHECK((out.xi.coeffs - amp * xi).norm() < 1e-12);
  const Matrix expected =
      g0.mat * lie::exp_from_coeffs(kind, Vector(amp * xi), -h);
  CHECK((out.g.mat - expected).norm() < 1e-12);

  // Constant score: xi' picks up 2 (e^{gamma h} - 1) c.
  Vector c(3);
  c << 1.0, 2.0, -3.0;
  const ConstantScore cs(c);
  const PhaseState out2 =
      dyn::bsoi_step_with_noise(state, cs, 1.0, cfg, h, zero);
  const Vector delta = out2.xi.coeffs - amp * xi;
  CHECK((delta - 0.21034183615129542 * c).norm() < 1e-12);
}

TEST_CASE("composed backward steps stay on the manifold") {
  DiffusionConfig cfg;
  cfg.kind = GroupKind::special_orthogonal(3);
  cfg.gamma = 0.002;  // keep e^{gamma h N} bounded over 1000 steps
  const double h = 0.01;
  const StationaryScore score;

  for (int reorth : {100, 0}) {
    cfg.reorth_every = reorth;
    Rng rng = make_stream(21, 8);
    PhaseState state = dyn::sample_prior(cfg, rng);
    for (int n = 0; n < 1000; ++n) {
      state = dyn::bsoi_step(state, score, n * h, cfg, h, rng);
      if (reorth > 0 && (n + 1) % reorth == 0) lie::reorthonormalize(state.g);
    }
    CHECK(lie::is_on_group(state.g, reorth > 0 ? 1e-8 : 1e-6));
    CHECK(state.xi.coeffs.allFinite());
  }
}

TEST_CASE("pfode determinism and zero-score flow") {
  const GroupKind kind = GroupKind::torus(2);
  DiffusionConfig cfg = torus_cfg(2);
  Rng rng = make_stream(21, 9);
  const PhaseState state = dyn::sample_prior(cfg, rng);
  const ZeroScore zs;
  const PhaseState a = dyn::pfode_step(state, zs, 0.3, cfg, 0.05);
  const PhaseState b = dyn::pfode_step(state, zs, 0.3, cfg, 0.05);
  CHECK((a.g.mat - b.g.mat).norm() == 0.0);
  CHECK((a.xi.coeffs - b.xi.coeffs).norm() == 0.0);
  const double amp = std::exp(cfg.gamma * 0.05);
  CHECK((a.xi.coeffs - amp * state.xi.coeffs).norm() < 1e-14);
}

TEST_CASE("pfode tracks the exact momentum flow at first order") {
  // Data concentrated at xi = 0: the exact probability-flow map is linear and
  // carries N(0, 1) at model time 0 to N(0, 1 - e^{-2 (T - tau)}).  A single
  // particle therefore evolves as xi_tau = xi_0 sigma(T - tau) / sigma(T),
  // and the left-point integrator converges to it at O(h).
  const GroupKind kind = GroupKind::torus(1);
  DiffusionConfig cfg = torus_cfg(1);
  cfg.horizon_T = 2.0;
  const double eps = 0.1;
  const OuExactScore score(cfg.horizon_T, cfg.gamma);

  auto sigma2 = [&](double t) { return 1.0 - std::exp(-2.0 * cfg.gamma * t); };
  const double exact =
      std::sqrt(sigma2(eps)) / std::sqrt(sigma2(cfg.horizon_T));

  auto run = [&](int n_steps) {
    const double h = (cfg.horizon_T - eps) / n_steps;
    Vector xi = Vector::Ones(1);
    PhaseState state = identity_state(kind, xi);
    for (int n = 0; n < n_steps; ++n)
      state = dyn::pfode_step(state, score, n * h, cfg, h);
    return state.xi.coeffs[0];
  };

  const double err1 = std::abs(run(200) - exact);
  const double err2 = std::abs(run(400) - exact);
  CHECK(err1 < 0.02);
  // O(h): halving the step should roughly halve the error.
  CHECK(err1 / err2 > 1.5);
  CHECK(err1 / err2 < 2.8);
}

TEST_CASE("sample_prior statistics") {
  DiffusionConfig cfg;
  cfg.kind = GroupKind::special_orthogonal(3);
  Rng rng = make_stream(21, 10);
  const int n = 100000;
  Eigen::MatrixXd xs(n, 3);
  for (int i = 0; i < n; ++i) {
    const PhaseState s = dyn::sample_prior(cfg, rng);
    if (i < 100) CHECK(lie::is_on_group(s.g, 1e-8));
    xs.row(i) = s.xi.coeffs.transpose();
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = xs.col(j).mean();
    const double var = (xs.col(j).array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 0.02);
  }
}

TEST_CASE("batched fosi matches the single-chain step") {
  const GroupKind kind = GroupKind::torus(3);
  DiffusionConfig cfg = torus_cfg(3);
  Vector xi(3);
  xi << 0.3, -1.7, 2.2;
  PhaseState single = identity_state(kind, xi);
  StateBatch batch{kind, {single.g.mat}, single.xi.coeffs.transpose()};

  Rng rng_a = make_stream(21, 11);
  Rng rng_b = make_stream(21, 11);
  const double h = 0.05;
  single = dyn::fosi_step(single, cfg, h, rng_a);
  dyn::fosi_step_batch(batch, cfg.gamma, h, rng_b);
  CHECK((batch.xi.row(0).transpose() - single.xi.coeffs).norm() < 1e-15);
  CHECK((batch.g[0] - single.g.mat).norm() < 1e-15);
}

TEST_CASE("sample_backward step count and early stop") {
  DiffusionConfig cfg = torus_cfg(2);
  cfg.gamma = 0.1;
  cfg.horizon_T = 10.0;
  cfg.steps_N = 50;
  cfg.eps_early_stop = 0.5;
  const ZeroScore zs;

  // With zero score the probability-flow momentum update is a pure
  // amplification: xi_end = e^{gamma * n_steps * h} xi_0.
  Rng rng1 = make_stream(21, 12);
  Rng rng2 = make_stream(21, 12);
  Rng rng3 = make_stream(21, 12);
  const StateBatch full = dyn::sample_backward(zs, cfg, 4, rng1, true, false);
  const StateBatch stopped =
      dyn::sample_backward(zs, cfg, 4, rng2, true, true);
  const StateBatch prior = dyn::sample_prior_batch(cfg.kind, 4, rng3);
  const double h = cfg.h();
  const double amp_full = std::exp(cfg.gamma * 50 * h);
  const double amp_stop = std::exp(cfg.gamma * 47 * h);  // floor(9.5 / 0.2)
  CHECK((full.xi - amp_full * prior.xi).norm() < 1e-9);
  CHECK((stopped.xi - amp_stop * prior.xi).norm() < 1e-9);
  for (int i = 0; i < full.size(); ++i)
    CHECK(lie::is_on_group(lie::GroupElement{cfg.kind, full.g[i]}, 1e-8));
}

TEST_CASE("trajectory JSONL dump") {
  DiffusionConfig cfg = torus_cfg(2);
  cfg.steps_N = 3;
  cfg.horizon_T = 0.3;
  cfg.eps_early_stop = 0.05;
  Rng rng = make_stream(21, 13);
  const dyn::Trajectory traj =
      dyn::fosi_trajectory(dyn::sample_prior(cfg, rng), cfg, rng);
  const std::string text = dyn::trajectory_to_jsonl(traj);
  const auto lines = serialize::split_lines(text);
  REQUIRE(lines.size() == 4);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto j = nlohmann::json::parse(lines[i]);
    CHECK(j["t"].get<double>() == doctest::Approx(0.1 * i).epsilon(1e-12));
    const lie::GroupElement g =
        serialize::element_from_json(cfg.kind, j["g"]);
    CHECK((g.mat - traj.states[i].g.mat).norm() == 0.0);
  }
}
