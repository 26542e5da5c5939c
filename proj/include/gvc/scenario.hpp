#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gvc/constraints.hpp"
#include "gvc/controller.hpp"
#include "gvc/dynamics.hpp"
#include "gvc/governor.hpp"
#include "gvc/integrator.hpp"

namespace gvc {

/// Diagonal of P used for the aggressive transfer demonstrations.
inline const Vec5 kTransferWeights = (Vec5() << 5e-11, 0.01, 0.005, 0.0075, 5e-4).finished();

struct ScenarioConfig {
  std::string name;
  BodyParams body;
  OrbitalElements x0;
  double theta0 = 0.0;
  OrbitalElements x_des;

  Vec5 p_diag = kTransferWeights;
  std::optional<double> q1;  // empty: size from V0 at x0
  std::optional<double> q2;
  bool barriers = true;
  double reset_period = 0.1 * 3600.0;  // s; 0 disables periodic resets

  ConstraintConfig constraints;
  SaturationMode saturation = TwoNormBall{};
  std::optional<GovernorConfig> governor;

  double t_final = 40.0 * 3600.0;  // s
  double log_period = 60.0;        // s
  IntegratorOptions integrator;

  /// Starting weights: explicit q1/q2 if given, else min_weights(V0(x0)), floored.
  Weights initial_weights() const;
  ClosedLoopSetup setup() const { return {constraints, saturation, body, integrator}; }
  LyapunovController controller(const OrbitalElements& target, const Weights& w) const {
    return {target, w, constraints, saturation, body};
  }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

/**
 * Reads an INI-style scenario. Sections: body, initial, target, weights,
 * constraints, saturation, governor, integration. Only `initial` and `target`
 * are required. Angles accept `pi` expressions such as `3*pi/2`.
 * Unknown sections or keys are a ParseError.
 */
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& name = "<string>");

/// Parses a number or one of `pi`, `k*pi`, `pi/m`, `k*pi/m`.
double parse_number(const std::string& text);

/// Shipped scenarios live here (paper_fig1.ini and friends).
std::filesystem::path scenario_directory();

/// Resolves a bare name like `paper_fig1` against the shipped scenarios.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

} // namespace gvc
