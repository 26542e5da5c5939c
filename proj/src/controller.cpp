#include "gvc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gvc/errors.hpp"

namespace gvc {

Weights Weights::diagonal(const Vec5& p_diag, double q1, double q2) {
  Weights w;
  w.p = p_diag.asDiagonal();
  w.q1 = q1;
  w.q2 = q2;
  return w;
}

bool Weights::valid() const {
  if (!p.allFinite() || !p.isApprox(p.transpose(), 0.0)) return false;
  Eigen::LLT<Mat5> llt(p);
  if (llt.info() != Eigen::Success) return false;
  if (!barriers) return true;
  return std::isfinite(q1) && q1 > 0.0 && std::isfinite(q2) && q2 > 0.0;
}

ConvexProjection ball_projection(double radius) {
  ConvexProjection proj;
  proj.name = "ball";
  proj.project = [radius](const Vec3& u) -> Vec3 {
    const double n = u.norm();
    return n <= radius ? u : Vec3(u * (radius / n));
  };
  // Scaling onto the sphere can round one ulp outside.
  proj.contains = [radius](const Vec3& u) { return u.norm() <= radius * (1.0 + 1e-12); };
  return proj;
}

ConvexProjection box_projection(const Vec3& bounds) {
  ConvexProjection proj;
  proj.name = "box";
  proj.project = [bounds](const Vec3& u) -> Vec3 {
    return u.cwiseMax(-bounds).cwiseMin(bounds);
  };
  proj.contains = [bounds](const Vec3& u) { return (u.cwiseAbs().array() <= bounds.array()).all(); };
  return proj;
}

bool projection_is_idempotent(const ConvexProjection& proj, int samples, double scale,
                              unsigned seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (int k = 0; k < samples; ++k) {
    const Vec3 u(dist(rng), dist(rng), dist(rng));
    const Vec3 once = proj.project(u);
    const Vec3 twice = proj.project(once);
    if (!once.allFinite() || (twice - once).norm() > tol * std::max(1.0, once.norm())) {
      return false;
    }
  }
  return true;
}

std::string mode_name(const SaturationMode& mode) {
  struct {
    std::string operator()(const TwoNormBall&) const { return "two_norm"; }
    std::string operator()(const InfNormBox&) const { return "inf_norm"; }
    std::string operator()(const ConvexProjection& p) const { return "projection_" + p.name; }
  } visitor;
  return std::visit(visitor, mode);
}

bool periapsis_barrier_active(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return x.a * (1.0 - x.e) < cfg.r_min + cfg.eps1;
}

bool eccentricity_barrier_active(const OrbitalElements& x, const ConstraintConfig& cfg) {
  return x.e < cfg.e_min + cfg.eps2;
}

BarrierTerms barrier_terms(const OrbitalElements& x, const ConstraintConfig& cfg,
                           const Weights& w) {
  BarrierTerms out;
  if (!w.barriers) return out;
  if (periapsis_barrier_active(x, cfg)) {
    const double d = x.a * (1.0 - x.e) - cfg.r_min - cfg.eps1;
    out.b1 = 0.5 * w.q1 * d * d;
    out.grad_b1(0) = w.q1 * (1.0 - x.e) * d;
    out.grad_b1(1) = -w.q1 * x.a * d;
  }
  if (eccentricity_barrier_active(x, cfg)) {
    const double d = x.e - cfg.e_min - cfg.eps2;
    out.b2 = 0.5 * w.q2 * d * d;
    out.grad_b2(1) = w.q2 * d;
  }
  return out;
}

double quadratic_value(const Mat5& p, const OrbitalElements& x, const OrbitalElements& x_des) {
  const Vec5 d = x.vec() - x_des.vec();
  return 0.5 * d.dot(p * d);
}

double lyapunov_value(const OrbitalElements& x, const OrbitalElements& x_des,
                      const ConstraintConfig& cfg, const Weights& w) {
  const BarrierTerms b = barrier_terms(x, cfg, w);
  return quadratic_value(w.p, x, x_des) + b.b1 + b.b2;
}

ControlAccel nominal_control(const OrbitalElements& x, double theta,
                             const OrbitalElements& x_des, const ConstraintConfig& cfg,
                             const Weights& w, const BodyParams& body) {
  const Vec5 grad = w.p * (x.vec() - x_des.vec()) + barrier_terms(x, cfg, w).gradient();
  if (grad.isZero(0.0)) return {};
  const Mat53 g = gve_matrix(x, theta, body);
  return ControlAccel::from_vec(-(g.transpose() * grad));
}

ControlAccel saturate(const ControlAccel& u_nom, const SaturationMode& mode) {
  const Vec3 u = u_nom.vec();
  struct {
    const Vec3& u;
    Vec3 operator()(const TwoNormBall& ball) const {
      const double n = u.norm();
      if (n <= ball.u_max) return u;
      Vec3 out = u * (ball.u_max / n);
      // Guard the last ulp so the output is never outside the ball.
      while (out.norm() > ball.u_max) out *= (1.0 - 1e-16);
      return out;
    }
    Vec3 operator()(const InfNormBox& box) const {
      return u.cwiseMax(-box.bounds).cwiseMin(box.bounds);
    }
    Vec3 operator()(const ConvexProjection& proj) const { return proj.project(u); }
  } visitor{u};
  return ControlAccel::from_vec(std::visit(visitor, mode));
}

WeightBounds min_weights(double v0, const ConstraintConfig& cfg) {
  return {2.0 * v0 / (cfg.eps1 * cfg.eps1), 2.0 * v0 / (cfg.eps2 * cfg.eps2)};
}

Weights reset_weights(const OrbitalElements& x, const OrbitalElements& x_des,
                      const ConstraintConfig& cfg, const Weights& w) {
  if (any_barrier_active(x, cfg)) {
    throw ResetNotPermitted("barrier weights can only be reset with both barriers inactive");
  }
  const WeightBounds q = min_weights(quadratic_value(w.p, x, x_des), cfg);
  Weights out = w;
  out.q1 = std::max(q.q1, kWeightFloor);
  out.q2 = std::max(q.q2, kWeightFloor);
  return out;
}

FeedbackLaw LyapunovController::law() const {
  return [ctl = *this](const OrbitalElements& x, double theta, double) { return ctl(x, theta); };
}

} // namespace gvc

namespace gvc {

bool within_control_set(const ControlAccel& u, const SaturationMode& mode, double tol) {
  const Vec3 v = u.vec();
  struct {
    const Vec3& v;
    double tol;
    bool operator()(const TwoNormBall& b) const { return v.norm() <= b.u_max + tol; }
    bool operator()(const InfNormBox& b) const {
      return (v.cwiseAbs().array() <= b.bounds.array() + tol).all();
    }
    bool operator()(const ConvexProjection& p) const {
      return p.contains ? p.contains(v) || (p.project(v) - v).norm() <= tol
                        : (p.project(v) - v).norm() <= tol;
    }
  } visitor{v, tol};
  return std::visit(visitor, mode);
}

} // namespace gvc
