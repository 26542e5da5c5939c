#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gvc/governor.hpp"
#include "gvc/scenario.hpp"

namespace gvc {

struct GovernorRecord {
  double kappa = 0.0;
  OrbitalElements x_virtual;
  bool in_terminal = false;
};

/// One logged sample. `v`, `b1`, `b2` refer to the target the controller was
/// flying at that instant (the virtual target on governed runs).
struct TrajectoryRecord {
  double t = 0.0;
  OrbitalElements x;
  double theta = 0.0;
  ControlAccel u;
  double v = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double c1_slack = 0.0;  // km
  double c3_slack = 0.0;
  double u_norm = 0.0;    // km/s^2
  std::optional<GovernorRecord> governor;
};

struct GovernorEvent {
  double t = 0.0;
  double kappa = 0.0;
  bool target_changed = false;
  bool terminal_checked = false;
  bool terminal_ok = true;
  bool delta_rejected = false;
  int predictions = 0;
};

struct RunResult {
  std::vector<TrajectoryRecord> log;
  /// Level c0 of the terminal set Q(X_des); 0 when the target has no margin.
  double c0_target = 0.0;
  bool converged = false;
  std::optional<double> convergence_time;  // first logged entry into Q(X_des)
  int resets_applied = 0;
  std::vector<GovernorEvent> governor_events;
  long integrator_steps = 0;
  /// Set when the run stopped early on a model or integration error
  /// (only with RunOptions::keep_partial_on_failure).
  std::optional<std::string> failure;
};

struct RunOptions {
  bool stop_on_convergence = false;
  bool keep_log = true;
  /// Return the log up to a numerical failure instead of throwing.
  bool keep_partial_on_failure = false;
};

/**
 * Simulates the closed loop described by `cfg`: the saturated
 * barrier-Lyapunov feedback, periodic weight resets (or the reference
 * governor when configured), logging every cfg.log_period seconds.
 *
 * Model and integration errors are rethrown with the simulation time attached.
 */
RunResult run_closed_loop(const ScenarioConfig& cfg, const RunOptions& opts = {});

struct RunSummary {
  double min_c1_slack = 0.0;
  double min_c3_slack = 0.0;
  double max_u_norm = 0.0;
  Vec3 max_abs_channel = Vec3::Zero();
  double max_v_increase = 0.0;  // largest V(t_k+1) - V(t_k) on non-governed runs
};

RunSummary summarize(const RunResult& run);

struct GridSpec {
  double a_lo = 7378.0;
  double a_hi = 30378.0;
  double a_step = 1000.0;
  double e_lo = 0.05;
  double e_hi = 0.85;
  double e_step = 0.1;
  double horizon = 40.0 * 3600.0;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct GridCell {
  double a0 = 0.0;
  double e0 = 0.0;
  bool feasible = false;
  bool converged = false;
  std::optional<double> convergence_time;
  std::string error;
};

struct GridStudyResult {
  std::vector<GridCell> cells;
  double c0_target = 0.0;

  std::size_t feasible_count() const;
  std::size_t converged_count() const;
};

/// Mesh values lo, lo + step, ... up to hi (inclusive within round-off).
std::vector<double> mesh(double lo, double hi, double step);

GridStudyResult run_grid_study(const ScenarioConfig& base, const GridSpec& spec);

struct C0Point {
  double s = 0.0;  // position on the segment, 0 at X(0), 1 at X_des
  OrbitalElements x_virtual;
  double c0 = 0.0;
  bool ok = false;
  std::string error;
};

/// terminal_level at n_points evenly spaced virtual targets from x0 to x_des.
std::vector<C0Point> run_c0_sweep(const OrbitalElements& x0, const OrbitalElements& x_des,
                                  int n_points, const Weights& w, const ConstraintConfig& cfg);

struct ComparisonRun {
  double t_hor = 0.0;  // 0 marks the governor-free baseline
  RunResult result;
  RunSummary summary;
};

struct GovernorComparison {
  ComparisonRun baseline;
  std::vector<ComparisonRun> governed;
};

/// Baseline without the governor plus one governed run per horizon [s].
GovernorComparison run_governor_comparison(const ScenarioConfig& cfg,
                                           const std::vector<double>& horizons);

} // namespace gvc
