#pragma once

#include <cmath>
#include <random>
#include <string>

#include "gvc/scenario.hpp"

namespace gvc::oracle {

/// Random transfer whose start and target both keep the barriers inactive, so
/// the run starts with V = V0 and weights sized from V0(x0).
template <typename Rng>
ScenarioConfig random_feasible_scenario(Rng& rng, int index, double t_final) {
  ScenarioConfig cfg;
  cfg.name = "random_" + std::to_string(index);
  const ConstraintConfig& c = cfg.constraints;
  const double rp_floor = c.r_min + c.eps1 + 50.0;
  const double e_floor = c.e_min + c.eps2 + 1e-3;

  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), inc(0.2, M_PI - 0.2);
  const auto draw = [&](double a_lo, double a_hi, double e_hi) {
    std::uniform_real_distribution<double> ua(a_lo, a_hi), ue(e_floor, e_hi);
    for (;;) {
      const OrbitalElements x{ua(rng), ue(rng), inc(rng), ang(rng), ang(rng)};
      if (x.a * (1.0 - x.e) >= rp_floor) {
        return x;
      }
    }
  };
  cfg.x0 = draw(7500.0, 30000.0, 0.7);
  cfg.x_des = draw(6900.0, 12000.0, 0.1);
  cfg.theta0 = ang(rng);
  cfg.t_final = t_final;
  return cfg;
}

} // namespace gvc::oracle
