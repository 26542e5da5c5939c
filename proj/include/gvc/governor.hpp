#pragma once

#include <array>
#include <map>
#include <mutex>

#include "gvc/constraints.hpp"
#include "gvc/controller.hpp"
#include "gvc/integrator.hpp"

namespace gvc {

struct GovernorConfig {
  double t_hor = 15.0 * 3600.0;         // s
  double update_period = 0.1 * 3600.0;  // s
  int bisection_iters = 10;
  double delta = 1e-6;  // P-weighted norm sqrt(dX^T P dX)
  bool delta_rejection = true;
  /// Also forward-simulate the kappa = 0 fallback and record whether it lands in Q.
  bool verify_fallback = true;

  bool valid() const;
};

struct GovernorState {
  OrbitalElements x_des_virtual;
  double kappa_last = 0.0;
};

/// Everything except target and weights needed to run the closed loop.
struct ClosedLoopSetup {
  ConstraintConfig constraints;
  SaturationMode saturation = TwoNormBall{};
  BodyParams body;
  IntegratorOptions integrator;
};

/// Largest values of f1 = r_min + eps1 - a(1-e) and f2 = e_min + eps2 - e
/// over the sublevel set {V0(P, X, Xv) <= c0}.
struct TerminalMaxima {
  double f1 = 0.0;
  double f2 = 0.0;
};

TerminalMaxima terminal_maxima(const OrbitalElements& x_virtual, const Mat5& p,
                               const ConstraintConfig& cfg, double c0);

/**
 * Largest c0 such that both barriers vanish on {V0(P, X, Xv) <= c0}.
 *
 * f1 and f2 only depend on (a, e), so the maximization runs over the (a, e)
 * shadow of the ellipsoid, whose shape matrix is the inverse of the (a, e)
 * block of P^-1. For diagonal P this is just diag(P_aa, P_ee).
 *
 * Throws InfeasibleTerminalSet when the virtual target itself has a barrier
 * active (no positive c0 exists).
 */
double terminal_level(const OrbitalElements& x_virtual, const Weights& w,
                      const ConstraintConfig& cfg);

bool in_terminal_set(const OrbitalElements& x, const OrbitalElements& x_virtual,
                     const Weights& w, double c0);

/// Memoizes terminal_level per virtual target. Thread-safe.
class TerminalLevelCache {
public:
  double get(const OrbitalElements& x_virtual, const Weights& w, const ConstraintConfig& cfg);
  std::size_t size() const;

private:
  mutable std::mutex mutex_;
  std::map<std::array<double, 5>, double> levels_;
};

/// Closed-loop state after t_hor seconds with the target held at x_virtual
/// and constant weights.
OrbitalElements predict_terminal(const OrbitalElements& x, double theta,
                                 const OrbitalElements& x_virtual, const Weights& w,
                                 const ClosedLoopSetup& setup, double t_hor);

GovernorState initialize_governor(const OrbitalElements& x0, const ConstraintConfig& cfg);

struct GovernorUpdate {
  GovernorState state;
  /// Weights to fly with until the next update (reset whenever the target moves).
  Weights weights;
  bool target_changed = false;
  /// Terminal condition of the accepted candidate, evaluated when it was predicted.
  bool terminal_ok = true;
  bool terminal_checked = false;
  bool delta_rejected = false;
  int predictions = 0;
};

/**
 * One reference-governor step: bisection on kappa in [0, 1] for the update
 * Xv <- Xv + kappa (Xd - Xv), accepting a candidate only if the predicted
 * state lands in Q(candidate). kappa = 0 is the always-available fallback.
 * Target moves are only considered while both barriers are inactive, since
 * the weights must be resized with every move.
 */
GovernorUpdate governor_update(const GovernorState& gs, const OrbitalElements& x, double theta,
                               const OrbitalElements& x_des_final, const Weights& w,
                               const GovernorConfig& gcfg, const ClosedLoopSetup& setup,
                               TerminalLevelCache& cache);

/// sqrt((x - y)^T P (x - y)).
double weighted_distance(const Mat5& p, const OrbitalElements& x, const OrbitalElements& y);

} // namespace gvc
