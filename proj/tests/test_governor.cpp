#include <doctest.h>

#include <cmath>
#include <random>

#include "gvc/errors.hpp"
#include "gvc/governor.hpp"
#include "gvc/harness.hpp"
#include "gvc/scenario.hpp"

using namespace gvc;

namespace {

const ConstraintConfig kCfg;
const OrbitalElements kXdes{6878.0, 0.02, M_PI / 2, 3 * M_PI / 2, M_PI};
const OrbitalElements kNear{7200.0, 0.05, 1.4, 4.6, 3.0};

double f1(const Vec5& x) { return kCfg.r_min + kCfg.eps1 - x(0) * (1.0 - x(1)); }
double f2(const Vec5& x) { return kCfg.e_min + kCfg.eps2 - x(1); }

/// Largest f1, f2 over n points on the boundary of {1/2 d^T P d <= c}.
std::pair<double, double> boundary_max(const Mat5& p, const OrbitalElements& xv, double c, int n,
                                       std::mt19937_64& rng) {
  const Eigen::LLT<Mat5> llt(p);
  const Mat5 lt_inv = Mat5(llt.matrixU()).inverse();
  std::normal_distribution<double> g;
  double m1 = -INFINITY, m2 = -INFINITY;
  for (int k = 0; k < n; ++k) {
    Vec5 z;
    for (int j = 0; j < 5; ++j) z(j) = g(rng);
    const Vec5 d = lt_inv * (std::sqrt(2.0 * c) * z.normalized());
    const Vec5 x = xv.vec() + d;
    m1 = std::max(m1, f1(x));
    m2 = std::max(m2, f2(x));
  }
  return {m1, m2};
}

/// Largest f1, f2 on a dense angular grid of the (a, e) boundary for diagonal P.
std::pair<double, double> shadow_max(const Mat5& p, const OrbitalElements& xv, double c, int n) {
  double m1 = -INFINITY, m2 = -INFINITY;
  const double ra = std::sqrt(2.0 * c / p(0, 0));
  const double re = std::sqrt(2.0 * c / p(1, 1));
  for (int k = 0; k < n; ++k) {
    const double phi = 2 * M_PI * k / n;
    Vec5 x = xv.vec();
    x(0) += ra * std::cos(phi);
    x(1) += re * std::sin(phi);
    m1 = std::max(m1, f1(x));
    m2 = std::max(m2, f2(x));
  }
  return {m1, m2};
}

ClosedLoopSetup setup() {
  ClosedLoopSetup s;
  s.constraints = kCfg;
  s.saturation = TwoNormBall{kCfg.u_max};
  return s;
}

} // namespace

TEST_CASE("terminal level is the largest barrier-free sublevel") {
  const Weights w = Weights::diagonal(kTransferWeights, 1.0, 1.0);
  const double c0 = terminal_level(kXdes, w, kCfg);
  CHECK(c0 == doctest::Approx(1.6035e-7).epsilon(1e-3));

  const auto [m1, m2] = shadow_max(w.p, kXdes, c0, 1'000'000);
  CHECK(m1 <= 1e-9);
  CHECK(m2 <= 0.0);
  const auto [g1, g2] = shadow_max(w.p, kXdes, 1.001 * c0, 1'000'000);
  CHECK(std::max(g1, g2) > 0.0);

  std::mt19937_64 rng(1);
  const auto [r1, r2] = boundary_max(w.p, kXdes, c0, 1'000'000, rng);
  CHECK(r1 <= 1e-9);
  CHECK(r2 <= 0.0);
}

TEST_CASE("terminal maxima bound sampled maxima for a coupled weight matrix") {
  std::mt19937_64 rng(77);
  Mat5 a = Mat5::Random();
  Mat5 p = a * a.transpose() * 1e-3 + Mat5(kTransferWeights.asDiagonal());
  Weights w;
  w.p = p;
  const OrbitalElements xv{9000.0, 0.1, 1.0, 1.0, 1.0};
  const double c0 = terminal_level(xv, w, kCfg);
  CHECK(c0 > 0.0);
  const TerminalMaxima tm = terminal_maxima(xv, p, kCfg, c0);
  const auto [s1, s2] = boundary_max(p, xv, c0, 200'000, rng);
  CHECK(s1 <= tm.f1 + 1e-9);
  CHECK(s2 <= tm.f2 + 1e-15);
  CHECK(std::max(tm.f1, tm.f2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("terminal level needs margin at the virtual target") {
  const Weights w = Weights::diagonal(kTransferWeights, 1.0, 1.0);
  CHECK_THROWS_AS(terminal_level({6660.0, 0.0005, 1.0, 0.0, 0.0}, w, kCfg), InfeasibleTerminalSet);
  // a(1 - e) exactly on the barrier switch.
  CHECK_THROWS_AS(terminal_level({6653.0, 0.0, 1.0, 0.0, 0.0}, w, kCfg), InfeasibleTerminalSet);
}

TEST_CASE("terminal set membership is closed") {
  const Weights w = Weights::diagonal(kTransferWeights, 1.0, 1.0);
  CHECK(in_terminal_set(kXdes, kXdes, w, 0.0));
  OrbitalElements x = kXdes;
  x.a += 10.0;
  const double v = quadratic_value(w.p, x, kXdes);
  CHECK(in_terminal_set(x, kXdes, w, v));
  CHECK_FALSE(in_terminal_set(x, kXdes, w, std::nextafter(v, 0.0)));
  CHECK(weighted_distance(w.p, x, kXdes) == doctest::Approx(std::sqrt(5e-11) * 10.0));
}

TEST_CASE("terminal level cache") {
  const Weights w = Weights::diagonal(kTransferWeights, 1.0, 1.0);
  TerminalLevelCache cache;
  const double c = cache.get(kXdes, w, kCfg);
  CHECK(c == terminal_level(kXdes, w, kCfg));
  CHECK(cache.get(kXdes, w, kCfg) == c);
  CHECK(cache.size() == 1);
  cache.get(kNear, w, kCfg);
  CHECK(cache.size() == 2);
}

TEST_CASE("governor initialization") {
  const GovernorState gs = initialize_governor(kNear, kCfg);
  CHECK(gs.x_des_virtual == kNear);
  CHECK(gs.kappa_last == 0.0);
  CHECK_THROWS_AS(initialize_governor({6000.0, 0.1, 1.0, 0.0, 0.0}, kCfg), InfeasibleInitialState);
}

TEST_CASE("governor update keeps kappa in range and accepts only verified targets") {
  GovernorConfig g;
  g.t_hor = 3600.0;
  const ClosedLoopSetup s = setup();
  const Weights w0 = reset_weights(kNear, kNear, kCfg, Weights::diagonal(kTransferWeights, 1.0, 1.0));
  TerminalLevelCache cache;
  GovernorState gs = initialize_governor(kNear, kCfg);
  const GovernorUpdate up = governor_update(gs, kNear, 0.0, kXdes, w0, g, s, cache);
  CHECK(up.state.kappa_last >= 0.0);
  CHECK(up.state.kappa_last <= 1.0);
  CHECK(up.predictions >= 1);
  if (up.target_changed) {
    const Weights wc = reset_weights(kNear, up.state.x_des_virtual, kCfg, w0);
    CHECK(up.weights.q1 == wc.q1);
    const OrbitalElements xf = predict_terminal(kNear, 0.0, up.state.x_des_virtual, wc, s, g.t_hor);
    CHECK(in_terminal_set(xf, up.state.x_des_virtual, wc,
                          terminal_level(up.state.x_des_virtual, wc, kCfg)));
    const Vec5 moved = up.state.x_des_virtual.vec() - kNear.vec();
    const Vec5 full = kXdes.vec() - kNear.vec();
    CHECK((moved - up.state.kappa_last * full).norm() < 1e-9 * full.norm());
  }
}

TEST_CASE("governor update at the final target only verifies") {
  GovernorConfig g;
  g.t_hor = 1800.0;
  const ClosedLoopSetup s = setup();
  const Weights w = reset_weights(kNear, kXdes, kCfg, Weights::diagonal(kTransferWeights, 1.0, 1.0));
  TerminalLevelCache cache;
  const GovernorUpdate up = governor_update({kXdes, 0.3}, kNear, 0.0, kXdes, w, g, s, cache);
  CHECK(up.state.kappa_last == 1.0);
  CHECK_FALSE(up.target_changed);
  CHECK(up.terminal_checked);
  CHECK(up.predictions == 1);
  g.verify_fallback = false;
  const GovernorUpdate quiet = governor_update({kXdes, 0.3}, kNear, 0.0, kXdes, w, g, s, cache);
  CHECK(quiet.predictions == 0);
}

TEST_CASE("governor holds the target while a barrier is active") {
  GovernorConfig g;
  g.t_hor = 1800.0;
  g.verify_fallback = false;
  const ClosedLoopSetup s = setup();
  const OrbitalElements pinned{6660.0, 0.002, 1.0, 0.0, 0.0};
  REQUIRE(periapsis_barrier_active(pinned, kCfg));
  const Weights w = Weights::diagonal(kTransferWeights, 1e-4, 1e5);
  TerminalLevelCache cache;
  const GovernorUpdate up = governor_update({kNear, 0.5}, pinned, 0.0, kXdes, w, g, s, cache);
  CHECK(up.state.kappa_last == 0.0);
  CHECK(up.state.x_des_virtual == kNear);
  CHECK_FALSE(up.target_changed);
  CHECK(up.predictions == 0);
  CHECK(up.weights.q1 == w.q1);
}

TEST_CASE("steps shorter than delta are rejected") {
  GovernorConfig g;
  g.t_hor = 600.0;
  g.delta = 1e9;
  g.verify_fallback = false;
  const ClosedLoopSetup s = setup();
  const OrbitalElements far{21378.0, 0.65, M_PI / 10, 0.0, M_PI};
  const Weights w = reset_weights(far, far, kCfg, Weights::diagonal(kTransferWeights, 1.0, 1.0));
  TerminalLevelCache cache;
  const GovernorUpdate up = governor_update({far, 0.0}, far, M_PI, kXdes, w, g, s, cache);
  CHECK(up.state.kappa_last == 0.0);
  CHECK(up.state.x_des_virtual == far);
  CHECK(up.delta_rejected);
  g.delta_rejection = false;
  const GovernorUpdate took = governor_update({far, 0.0}, far, M_PI, kXdes, w, g, s, cache);
  CHECK(took.target_changed);
  CHECK(took.state.kappa_last > 0.0);
  CHECK(took.state.kappa_last < 1.0);
}

TEST_CASE("prediction is bit-identical to a simulated run") {
  ScenarioConfig cfg;
  cfg.x0 = kNear;
  cfg.theta0 = 0.4;
  cfg.x_des = kXdes;
  cfg.q1 = 2e-4;
  cfg.q2 = 3e5;
  cfg.reset_period = 0.0;
  cfg.t_final = 4.0 * 3600.0;
  cfg.log_period = 97.0;
  const RunResult run = run_closed_loop(cfg);
  const Weights w = cfg.initial_weights();
  const OrbitalElements xf = predict_terminal(kNear, 0.4, kXdes, w, cfg.setup(), cfg.t_final);
  REQUIRE(run.log.back().t == cfg.t_final);
  CHECK(run.log.back().x == xf);
  CHECK(predict_terminal(kNear, 0.4, kXdes, w, cfg.setup(), 0.0) == kNear);
}
