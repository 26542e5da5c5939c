#pragma once

#include "gvc/dynamics.hpp"

namespace gvc {

/// Periapsis, thrust and eccentricity bounds plus the barrier safety margins.
struct ConstraintConfig {
  double r_min = 6628.0;  // km
  double e_min = 1e-3;
  double u_max = 1e-3;    // km/s^2
  double eps1 = 25.0;     // km
  double eps2 = 5e-4;

  bool valid() const;
};

/// c1 = a(1-e) - r_min [km]; >= 0 is satisfied.
double periapsis_slack(const OrbitalElements& x, const ConstraintConfig& cfg);

/// c3 = e - e_min.
double eccentricity_slack(const OrbitalElements& x, const ConstraintConfig& cfg);

/// c2 = u_max^2 - |u|^2 [km^2/s^4].
double thrust_slack(const ControlAccel& u, const ConstraintConfig& cfg);

/// Closed boundary: zero slack counts as feasible.
bool instantaneously_feasible(const OrbitalElements& x, const ConstraintConfig& cfg);

} // namespace gvc
