#pragma once

#include <functional>
#include <string>
#include <variant>

#include "gvc/constraints.hpp"
#include "gvc/dynamics.hpp"
#include "gvc/integrator.hpp"

namespace gvc {

/// Lower bound kept on q1, q2 after a reset so they stay strictly positive.
inline constexpr double kWeightFloor = 1e-12;

/**
 * Lyapunov weights: the quadratic weight P (symmetric positive definite) and
 * the two barrier weights. `barriers = false` removes B1, B2 entirely, which
 * is how the control-constraint-only variant is run.
 */
struct Weights {
  Mat5 p = Mat5::Identity();
  double q1 = 1.0;  // km^-2
  double q2 = 1.0;
  bool barriers = true;

  static Weights diagonal(const Vec5& p_diag, double q1, double q2);
  bool valid() const;
};

/// |U|_2 <= u_max.
struct TwoNormBall {
  double u_max = 1e-3;
};

/// |U_k| <= bounds(k) channel by channel.
struct InfNormBox {
  Vec3 bounds = Vec3::Constant(1e-3);
};

/// Minimum 2-norm projection onto a convex compact set containing 0.
struct ConvexProjection {
  std::function<Vec3(const Vec3&)> project;
  std::string name;
  /// Membership test used by property checks; may be empty.
  std::function<bool(const Vec3&)> contains;
};

using SaturationMode = std::variant<TwoNormBall, InfNormBox, ConvexProjection>;

ConvexProjection ball_projection(double radius);
ConvexProjection box_projection(const Vec3& bounds);

/// Checks P(P(u)) == P(u) on `samples` random vectors of magnitude up to `scale`.
bool projection_is_idempotent(const ConvexProjection& proj, int samples, double scale,
                              unsigned seed = 7, double tol = 1e-15);

std::string mode_name(const SaturationMode& mode);

struct BarrierTerms {
  double b1 = 0.0;
  double b2 = 0.0;
  Vec5 grad_b1 = Vec5::Zero();
  Vec5 grad_b2 = Vec5::Zero();

  Vec5 gradient() const { return grad_b1 + grad_b2; }
};

bool periapsis_barrier_active(const OrbitalElements& x, const ConstraintConfig& cfg);
bool eccentricity_barrier_active(const OrbitalElements& x, const ConstraintConfig& cfg);
inline bool any_barrier_active(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return periapsis_barrier_active(x, cfg) || eccentricity_barrier_active(x, cfg);
}

/// Piecewise-quadratic barriers and their gradients (non-zero only in the a, e slots).
BarrierTerms barrier_terms(const OrbitalElements& x, const ConstraintConfig& cfg,
                           const Weights& w);

/// V0 = 1/2 (X - Xd)^T P (X - Xd), raw angle differences.
double quadratic_value(const Mat5& p, const OrbitalElements& x, const OrbitalElements& x_des);

/// V = V0 + B1 + B2.
double lyapunov_value(const OrbitalElements& x, const OrbitalElements& x_des,
                      const ConstraintConfig& cfg, const Weights& w);

/// U_nom = -G^T (P (X - Xd) + C(X)).
ControlAccel nominal_control(const OrbitalElements& x, double theta,
                             const OrbitalElements& x_des, const ConstraintConfig& cfg,
                             const Weights& w, const BodyParams& body);

ControlAccel saturate(const ControlAccel& u_nom, const SaturationMode& mode);

struct WeightBounds {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// Smallest q1, q2 that keep the barriers below their margins given V(t0) = v0.
WeightBounds min_weights(double v0, const ConstraintConfig& cfg);

/// Resizes q1, q2 from V0 at x. Only valid with both barriers inactive, in
/// which case V is unchanged. Throws ResetNotPermitted otherwise.
Weights reset_weights(const OrbitalElements& x, const OrbitalElements& x_des,
                      const ConstraintConfig& cfg, const Weights& w);

/// The saturated barrier-Lyapunov feedback for a fixed target and weights.
struct LyapunovController {
  OrbitalElements target;
  Weights weights;
  ConstraintConfig constraints;
  SaturationMode saturation = TwoNormBall{};
  BodyParams body;

  ControlAccel nominal(const OrbitalElements& x, double theta) const {
    return nominal_control(x, theta, target, constraints, weights, body);
  }
  ControlAccel operator()(const OrbitalElements& x, double theta) const {
    return saturate(nominal(x, theta), saturation);
  }
  double lyapunov(const OrbitalElements& x) const {
    return lyapunov_value(x, target, constraints, weights);
  }
  FeedbackLaw law() const;
};

} // namespace gvc

namespace gvc {

/// Whether u lies in the control set described by `mode` (up to `tol`).
bool within_control_set(const ControlAccel& u, const SaturationMode& mode, double tol = 0.0);

} // namespace gvc
