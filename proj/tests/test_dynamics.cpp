#include <doctest.h>

#include <cmath>
#include <random>

#include "gvc/dynamics.hpp"
#include "gvc/errors.hpp"
#include "gvc/integrator.hpp"
#include "support/oracles.hpp"

using namespace gvc;

namespace {

const BodyParams kEarth{};

bool rates_match(double analytic, double oracle) {
  return std::abs(analytic - oracle) <= std::max(1e-6 * std::abs(oracle), 1e-10);
}

} // namespace

TEST_CASE("conic geometry") {
  const OrbitalElements x{7000.0, 0.1, 0.5, 0.0, 0.0};
  CHECK(semi_latus_rectum(x) == doctest::Approx(6930.0));
  CHECK(radius(x, 0.0) == doctest::Approx(6300.0));
  CHECK(radius(x, M_PI) == doctest::Approx(7700.0));
  CHECK(cos_eccentric_anomaly(x, 0.0) == doctest::Approx(1.0));
  CHECK(cos_eccentric_anomaly(x, M_PI) == doctest::Approx(-1.0));
  CHECK(orbital_period(x, kEarth) ==
        doctest::Approx(2 * M_PI * std::sqrt(7000.0 * 7000.0 * 7000.0 / kEarthMu)));
}

TEST_CASE("control matrix structure") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 50; ++n) {
    const OrbitalElements x = oracle::random_orbit(rng);
    const double theta = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    const Mat53 g = gve_matrix(x, theta, kEarth);
    CHECK(g(0, 2) == 0.0);
    CHECK(g(1, 2) == 0.0);
    CHECK(g(2, 0) == 0.0);
    CHECK(g(2, 1) == 0.0);
    CHECK(g(3, 0) == 0.0);
    CHECK(g(3, 1) == 0.0);
  }
}

TEST_CASE("zero thrust leaves the elements fixed and theta at the Kepler rate") {
  const OrbitalElements x{12000.0, 0.3, 1.0, 0.4, 2.0};
  const double theta = 1.3;
  const StateRates r = state_derivative(x, theta, {}, kEarth);
  CHECK(r.elements.isZero(0.0));
  const double rr = radius(x, theta);
  CHECK(r.theta == doctest::Approx(std::sqrt(kEarthMu * semi_latus_rectum(x)) / (rr * rr)));
}

TEST_CASE("singular elements are rejected") {
  CHECK_THROWS_AS(gve_matrix({7000.0, 0.0, 0.5, 0.0, 0.0}, 0.3, kEarth), EccentricitySingularity);
  CHECK_THROWS_AS(gve_matrix({7000.0, 0.1, 0.0, 0.0, 0.0}, 0.3, kEarth), InclinationSingularity);
  CHECK_THROWS_AS(gve_matrix({7000.0, 0.1, M_PI, 0.0, 0.0}, 0.3, kEarth), InclinationSingularity);
  CHECK_THROWS_AS(cos_eccentric_anomaly({7000.0, 1e-12, 0.5, 0.0, 0.0}, 0.3),
                  EccentricitySingularity);
}

TEST_CASE("element rates agree with finite differences of thrusting Cartesian motion") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  for (int n = 0; n < 25; ++n) {
    const OrbitalElements x = oracle::random_orbit(rng);
    const double theta = ang(rng);
    const Vec3 u = oracle::random_control(rng, 1e-3);
    const StateRates r = state_derivative(x, theta, ControlAccel::from_vec(u), kEarth);
    const auto fd = oracle::fd_rates(x, theta, u, kEarthMu);
    for (int k = 0; k < 5; ++k) {
      INFO("sample " << n << " element " << k << ": " << r.elements(k) << " vs " << fd(k));
      CHECK(rates_match(r.elements(k), fd(k)));
    }
    INFO("x " << x.a << " " << x.e << " " << x.i << " th " << theta);
    INFO("sample " << n << " theta: " << r.theta << " vs " << fd(5));
    CHECK(rates_match(r.theta, fd(5)));
  }
}

TEST_CASE("Cartesian round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  for (int n = 0; n < 200; ++n) {
    const OrbitalElements x = oracle::random_orbit(rng);
    const double theta = ang(rng);
    const auto [y, th] = cartesian_to_elements(elements_to_cartesian(x, theta, kEarth), kEarth);
    CHECK(y.a == doctest::Approx(x.a).epsilon(1e-11));
    CHECK(y.e == doctest::Approx(x.e).epsilon(1e-10));
    CHECK(y.i == doctest::Approx(x.i).epsilon(1e-10));
    auto wrapped = [](double a, double b) { return std::abs(std::remainder(a - b, 2 * M_PI)); };
    CHECK(wrapped(y.raan, x.raan) < 1e-10);
    CHECK(wrapped(y.argp, x.argp) < 1e-9);
    CHECK(wrapped(th, theta) < 1e-9);
  }
}

TEST_CASE("vis-viva") {
  std::mt19937_64 rng(9);
  for (int n = 0; n < 100; ++n) {
    const OrbitalElements x = oracle::random_orbit(rng);
    const double theta = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    const CartesianState c = elements_to_cartesian(x, theta, kEarth);
    const double r = c.position.norm();
    CHECK(r == doctest::Approx(radius(x, theta)).epsilon(1e-12));
    CHECK(c.velocity.squaredNorm() == doctest::Approx(kEarthMu * (2.0 / r - 1.0 / x.a)).epsilon(1e-12));
  }
}

TEST_CASE("STW frame is orthonormal and right-handed") {
  const CartesianState c = elements_to_cartesian({9000.0, 0.2, 0.7, 1.0, 0.5}, 0.9, kEarth);
  const Eigen::Matrix3d m = stw_to_inertial(c);
  CHECK((m.transpose() * m - Eigen::Matrix3d::Identity()).norm() < 1e-14);
  CHECK(m.determinant() == doctest::Approx(1.0));
  CHECK((m.col(0) - c.position.normalized()).norm() < 1e-14);
}

TEST_CASE("unforced propagation over one period returns to the start") {
  const OrbitalElements x{15000.0, 0.4, 0.8, 0.3, 1.1};
  const double theta0 = 0.7;
  const double period = 2 * M_PI * std::sqrt(x.a * x.a * x.a / kEarthMu);
  const FeedbackLaw coast = [](const OrbitalElements&, double, double) { return ControlAccel{}; };
  for (auto method : {IntegratorMethod::Rosenbrock4, IntegratorMethod::DormandPrince45}) {
    IntegratorOptions opts;
    opts.method = method;
    const ElementState end = propagate_to(x, theta0, coast, kEarth, period, opts);
    CHECK((end.head<5>() - x.vec()).cwiseQuotient(x.vec().cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(end(5) - theta0 - 2 * M_PI) < 1e-6);
  }
}

TEST_CASE("unforced propagation stays periodic over ten orbits") {
  const OrbitalElements x{15000.0, 0.4, 0.8, 0.3, 1.1};
  const double theta0 = 0.7;
  const double period = orbital_period(x, kEarth);
  const FeedbackLaw coast = [](const OrbitalElements&, double, double) { return ControlAccel{}; };
  for (auto method : {IntegratorMethod::Rosenbrock4, IntegratorMethod::DormandPrince45}) {
    IntegratorOptions opts;
    opts.method = method;
    const PropagationLog log = propagate(x, theta0, coast, kEarth, 10 * period, period, opts);
    REQUIRE(log.size() == 11);
    for (std::size_t k = 0; k < log.size(); ++k) {
      // The element rates are exactly zero, so nothing may drift at all.
      CHECK(log[k].x == x);
      CHECK(std::abs(log[k].theta - theta0 - 2 * M_PI * k) < 1e-5);
    }
  }
}
