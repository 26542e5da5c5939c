#pragma once

#include <Eigen/Dense>
#include <utility>

namespace gvc {

using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat53 = Eigen::Matrix<double, 5, 3>;

/// Earth gravitational parameter [km^3/s^2].
inline constexpr double kEarthMu = 398600.4418;

/// Below this, e (or |sin i|) in a denominator is treated as singular.
inline constexpr double kSingularityGuard = 1e-9;

/**
 * The five slow classical elements X = [a e i raan argp].
 *
 * Units: a [km], angles [rad]. Angles are stored unwrapped; a RAAN of 3pi/2
 * and one of -pi/2 are different states as far as the controller is concerned.
 */
struct OrbitalElements {
  double a = 0.0;
  double e = 0.0;
  double i = 0.0;
  double raan = 0.0;
  double argp = 0.0;

  Vec5 vec() const { return Vec5(a, e, i, raan, argp); }
  static OrbitalElements from_vec(const Vec5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }

  /// a > 0, 0 <= e < 1, i in [0, pi], angles finite.
  bool valid() const;

  friend bool operator==(const OrbitalElements&, const OrbitalElements&) = default;
};

/// Thrust acceleration resolved in the STW (radial, transverse, normal) frame [km/s^2].
struct ControlAccel {
  double s = 0.0;
  double t = 0.0;
  double w = 0.0;

  Vec3 vec() const { return Vec3(s, t, w); }
  static ControlAccel from_vec(const Vec3& v) { return {v(0), v(1), v(2)}; }
  double norm() const { return vec().norm(); }

  friend bool operator==(const ControlAccel&, const ControlAccel&) = default;
};

struct BodyParams {
  double mu = kEarthMu;
};

struct CartesianState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// Element rates plus the true-anomaly rate.
struct StateRates {
  Vec5 elements = Vec5::Zero();
  double theta = 0.0;
};

double semi_latus_rectum(const OrbitalElements& x);
double radius(const OrbitalElements& x, double theta);

/// cos of the eccentric anomaly, (1 - r/a)/e clamped to [-1, 1].
/// Throws EccentricitySingularity for e below the guard.
double cos_eccentric_anomaly(const OrbitalElements& x, double theta);

/**
 * Control-influence matrix of the drift-free GVEs, Xdot = G(X, theta) U.
 *
 * Rows are (a, e, i, raan, argp); columns are (S, T, W). Entries (a,W),
 * (e,W), (i,S), (i,T), (raan,S), (raan,T) are structurally zero.
 */
Mat53 gve_matrix(const OrbitalElements& x, double theta, const BodyParams& body);

/// Keplerian rate sqrt(mu p)/r^2 plus the thrust-induced terms.
double theta_rate(const OrbitalElements& x, double theta, const ControlAccel& u,
                  const BodyParams& body);

StateRates state_derivative(const OrbitalElements& x, double theta, const ControlAccel& u,
                            const BodyParams& body);

CartesianState elements_to_cartesian(const OrbitalElements& x, double theta,
                                     const BodyParams& body);

/// Inverse of elements_to_cartesian. Returned angles lie in [0, 2pi).
/// The second member is the true anomaly.
std::pair<OrbitalElements, double> cartesian_to_elements(const CartesianState& c,
                                                         const BodyParams& body);

double orbital_period(const OrbitalElements& x, const BodyParams& body);

/// Rotation taking STW components to the inertial frame (columns e_r, e_theta, e_h).
Eigen::Matrix3d stw_to_inertial(const CartesianState& c);

} // namespace gvc
