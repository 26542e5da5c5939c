#include "gvc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gvc/errors.hpp"

namespace gvc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

void require_eccentricity(double e) {
  if (!(e >= kSingularityGuard)) {
    throw EccentricitySingularity("eccentricity " + std::to_string(e) +
                                  " below singularity guard");
  }
}

void require_inclination(double sin_i) {
  if (!(std::abs(sin_i) >= kSingularityGuard)) {
    throw InclinationSingularity("|sin i| = " + std::to_string(std::abs(sin_i)) +
                                 " below singularity guard");
  }
}

} // namespace

bool OrbitalElements::valid() const {
  return std::isfinite(a) && a > 0.0 && std::isfinite(e) && e >= 0.0 && e < 1.0 &&
         std::isfinite(i) && i >= 0.0 && i <= std::numbers::pi && std::isfinite(raan) &&
         std::isfinite(argp);
}

double semi_latus_rectum(const OrbitalElements& x) { return x.a * (1.0 - x.e * x.e); }

double radius(const OrbitalElements& x, double theta) {
  return semi_latus_rectum(x) / (1.0 + x.e * std::cos(theta));
}

double cos_eccentric_anomaly(const OrbitalElements& x, double theta) {
  require_eccentricity(x.e);
  const double r = radius(x, theta);
  return std::clamp((1.0 - r / x.a) / x.e, -1.0, 1.0);
}

Mat53 gve_matrix(const OrbitalElements& x, double theta, const BodyParams& body) {
  require_eccentricity(x.e);
  const double sin_i = std::sin(x.i);
  require_inclination(sin_i);

  const double p = semi_latus_rectum(x);
  const double r = radius(x, theta);
  const double h = std::sqrt(body.mu * p);
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  const double su = std::sin(theta + x.argp);
  const double cu = std::cos(theta + x.argp);
  const double cos_psi = cos_eccentric_anomaly(x, theta);
  const double a2 = 2.0 * x.a * x.a / h;

  Mat53 g = Mat53::Zero();
  g(0, 0) = a2 * x.e * st;
  g(0, 1) = a2 * p / r;
  g(1, 0) = p * st / h;
  g(1, 1) = p * (cos_psi + ct) / h;
  g(2, 2) = r * cu / h;
  g(3, 2) = r * su / (h * sin_i);
  g(4, 0) = -p * ct / (x.e * h);
  g(4, 1) = (r + p) * st / (x.e * h);
  g(4, 2) = -r * su * std::cos(x.i) / (h * sin_i);
  return g;
}

double theta_rate(const OrbitalElements& x, double theta, const ControlAccel& u,
                  const BodyParams& body) {
  const double p = semi_latus_rectum(x);
  const double r = radius(x, theta);
  const double h = std::sqrt(body.mu * p);
  const double kepler = h / (r * r);
  if (u.s == 0.0 && u.t == 0.0) return kepler;
  require_eccentricity(x.e);
  // The transverse term carries sin(theta); it mirrors the argp row.
  return kepler + (p * std::cos(theta) * u.s - (p + r) * std::sin(theta) * u.t) / (x.e * h);
}

StateRates state_derivative(const OrbitalElements& x, double theta, const ControlAccel& u,
                            const BodyParams& body) {
  StateRates rates;
  rates.elements = gve_matrix(x, theta, body) * u.vec();
  rates.theta = theta_rate(x, theta, u, body);
  return rates;
}

CartesianState elements_to_cartesian(const OrbitalElements& x, double theta,
                                     const BodyParams& body) {
  const double p = semi_latus_rectum(x);
  const double r = radius(x, theta);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double vk = std::sqrt(body.mu / p);

  const Vec3 r_pf(r * ct, r * st, 0.0);
  const Vec3 v_pf(-vk * st, vk * (x.e + ct), 0.0);

  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(x.raan, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(x.i, Vec3::UnitX()) *
                               Eigen::AngleAxisd(x.argp, Vec3::UnitZ()))
                                  .toRotationMatrix();
  return {rot * r_pf, rot * v_pf};
}

std::pair<OrbitalElements, double> cartesian_to_elements(const CartesianState& c,
                                                         const BodyParams& body) {
  const Vec3& rv = c.position;
  const Vec3& vv = c.velocity;
  const double r = rv.norm();
  const double v2 = vv.squaredNorm();
  const Vec3 hv = rv.cross(vv);
  const double h = hv.norm();
  const Vec3 h_hat = hv / h;

  const Vec3 e_vec = ((v2 - body.mu / r) * rv - rv.dot(vv) * vv) / body.mu;
  OrbitalElements x;
  x.e = e_vec.norm();
  x.a = 1.0 / (2.0 / r - v2 / body.mu);
  x.i = std::atan2(std::hypot(hv.x(), hv.y()), hv.z());

  // Node line; for equatorial orbits fall back to the x axis.
  Vec3 n_hat = Vec3::UnitZ().cross(h_hat);
  if (n_hat.norm() < 1e-14) {
    n_hat = Vec3::UnitX();
    x.raan = 0.0;
  } else {
    n_hat.normalize();
    x.raan = wrap_two_pi(std::atan2(n_hat.y(), n_hat.x()));
  }
  const Vec3 m_hat = h_hat.cross(n_hat);

  double theta = 0.0;
  if (x.e < 1e-14) {
    x.argp = 0.0;
    theta = wrap_two_pi(std::atan2(rv.dot(m_hat), rv.dot(n_hat)));
  } else {
    x.argp = wrap_two_pi(std::atan2(e_vec.dot(m_hat), e_vec.dot(n_hat)));
    const Vec3 e_hat = e_vec / x.e;
    const Vec3 q_hat = h_hat.cross(e_hat);
    theta = wrap_two_pi(std::atan2(rv.dot(q_hat), rv.dot(e_hat)));
  }
  return {x, theta};
}

double orbital_period(const OrbitalElements& x, const BodyParams& body) {
  return kTwoPi * std::sqrt(x.a * x.a * x.a / body.mu);
}

Eigen::Matrix3d stw_to_inertial(const CartesianState& c) {
  const Vec3 e_r = c.position.normalized();
  const Vec3 e_h = c.position.cross(c.velocity).normalized();
  const Vec3 e_t = e_h.cross(e_r);
  Eigen::Matrix3d m;
  m.col(0) = e_r;
  m.col(1) = e_t;
  m.col(2) = e_h;
  return m;
}

} // namespace gvc
