#include "gvc/constraints.hpp"

#include <cmath>

namespace gvc {

bool ConstraintConfig::valid() const {
  return std::isfinite(r_min) && r_min > 0.0 && std::isfinite(e_min) && e_min >= 0.0 &&
         std::isfinite(u_max) && u_max > 0.0 && std::isfinite(eps1) && eps1 > 0.0 &&
         std::isfinite(eps2) && eps2 > 0.0;
}

double periapsis_slack(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return x.a * (1.0 - x.e) - cfg.r_min;
}

double eccentricity_slack(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return x.e - cfg.e_min;
}

double thrust_slack(const ControlAccel& u, const ConstraintConfig& cfg) {
  return cfg.u_max * cfg.u_max - u.vec().squaredNorm();
}

bool instantaneously_feasible(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return periapsis_slack(x, cfg) >= 0.0 && eccentricity_slack(x, cfg) >= 0.0;
}

} // namespace gvc
