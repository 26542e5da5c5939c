#include "gvc/governor.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "gvc/errors.hpp"

namespace gvc {

namespace {

constexpr int kBoundarySamples = 720;

/// Shape matrix M of the (a, e) shadow {y : y^T M y <= 2 c0}.
Eigen::Matrix2d shadow_shape(const Mat5& p) {
  const Mat5 p_inv = p.inverse();
  return p_inv.topLeftCorner<2, 2>().inverse();
}

/// Minimum of a(1-e) over the boundary of the (a, e) ellipse; the function is
/// bilinear with an indefinite Hessian, so the minimum is never interior.
double min_periapsis_on_ellipse(double a0, double e0, const Eigen::Matrix2d& shape, double c0) {
  // y = sqrt(2 c0) L^-T (cos phi, sin phi) with shape = L L^T.
  const Eigen::Matrix2d l = shape.llt().matrixL();
  const Eigen::Matrix2d map = std::sqrt(2.0 * c0) * l.transpose().inverse();
  auto rp = [&](double phi) {
    const Eigen::Vector2d y = map * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    return (a0 + y(0)) * (1.0 - e0 - y(1));
  };

  const double step = 2.0 * std::numbers::pi / kBoundarySamples;
  int best = 0;
  double best_val = rp(0.0);
  for (int k = 1; k < kBoundarySamples; ++k) {
    const double v = rp(k * step);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double lo = (best - 1) * step;
  const double hi = (best + 1) * step;
  boost::uintmax_t iters = 200;
  const auto refined = boost::math::tools::brent_find_minima(rp, lo, hi, 52, iters);
  return std::min(best_val, refined.second);
}

} // namespace

bool GovernorConfig::valid() const {
  return std::isfinite(t_hor) && t_hor > 0.0 && std::isfinite(update_period) &&
         update_period > 0.0 && bisection_iters >= 1 && std::isfinite(delta) && delta > 0.0;
}

double weighted_distance(const Mat5& p, const OrbitalElements& x, const OrbitalElements& y) {
  return std::sqrt(2.0 * quadratic_value(p, x, y));
}

TerminalMaxima terminal_maxima(const OrbitalElements& xv, const Mat5& p,
                               const ConstraintConfig& cfg, double c0) {
  const Eigen::Matrix2d shape = shadow_shape(p);
  TerminalMaxima m;
  m.f1 = cfg.r_min + cfg.eps1 - min_periapsis_on_ellipse(xv.a, xv.e, shape, c0);
  // min of e over the ellipse is e0 - sqrt(2 c0 (M^-1)_ee).
  const double e_span = std::sqrt(2.0 * c0 * shape.inverse()(1, 1));
  m.f2 = cfg.e_min + cfg.eps2 - (xv.e - e_span);
  return m;
}

double terminal_level(const OrbitalElements& xv, const Weights& w, const ConstraintConfig& cfg) {
  if (any_barrier_active(xv, cfg) ||
      xv.a * (1.0 - xv.e) == cfg.r_min + cfg.eps1 || xv.e == cfg.e_min + cfg.eps2) {
    throw InfeasibleTerminalSet("virtual target has no margin beyond the barrier switch");
  }
  auto admissible = [&](double c0) {
    const TerminalMaxima m = terminal_maxima(xv, w.p, cfg, c0);
    return m.f1 <= 0.0 && m.f2 <= 0.0;
  };

  double lo = 0.0;
  double hi = 1e-12;
  while (admissible(hi)) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e12) break;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-13 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) {
    throw InfeasibleTerminalSet("terminal level collapsed to zero");
  }
  return lo;
}

bool in_terminal_set(const OrbitalElements& x, const OrbitalElements& xv, const Weights& w,
                     double c0) {
  return quadratic_value(w.p, x, xv) <= c0;
}

double TerminalLevelCache::get(const OrbitalElements& xv, const Weights& w,
                               const ConstraintConfig& cfg) {
  const std::array<double, 5> key{xv.a, xv.e, xv.i, xv.raan, xv.argp};
  {
    std::lock_guard lock(mutex_);
    if (auto it = levels_.find(key); it != levels_.end()) return it->second;
  }
  const double c0 = terminal_level(xv, w, cfg);
  std::lock_guard lock(mutex_);
  levels_.emplace(key, c0);
  return c0;
}

std::size_t TerminalLevelCache::size() const {
  std::lock_guard lock(mutex_);
  return levels_.size();
}

OrbitalElements predict_terminal(const OrbitalElements& x, double theta, const OrbitalElements& xv,
                                 const Weights& w, const ClosedLoopSetup& setup, double t_hor) {
  if (t_hor <= 0.0) return x;
  const LyapunovController ctl{xv, w, setup.constraints, setup.saturation, setup.body};
  return unpack_elements(propagate_to(x, theta, ctl.law(), setup.body, t_hor, setup.integrator));
}

GovernorState initialize_governor(const OrbitalElements& x0, const ConstraintConfig& cfg) {
  if (!instantaneously_feasible(x0, cfg)) {
    throw InfeasibleInitialState("initial state violates the periapsis or eccentricity bound");
  }
  return {x0, 0.0};
}

GovernorUpdate governor_update(const GovernorState& gs, const OrbitalElements& x, double theta,
                               const OrbitalElements& x_des_final, const Weights& w,
                               const GovernorConfig& gcfg, const ClosedLoopSetup& setup,
                               TerminalLevelCache& cache) {
  GovernorUpdate out{gs, w};
  const Vec5 diff = x_des_final.vec() - gs.x_des_virtual.vec();

  auto check = [&](const OrbitalElements& cand, const Weights& wc) {
    ++out.predictions;
    const double c0 = cache.get(cand, wc, setup.constraints);
    const OrbitalElements xf = predict_terminal(x, theta, cand, wc, setup, gcfg.t_hor);
    return in_terminal_set(xf, cand, wc, c0);
  };
  auto verify_fallback = [&] {
    if (gcfg.verify_fallback) {
      out.terminal_checked = true;
      out.terminal_ok = check(gs.x_des_virtual, w);
    }
  };

  if (diff.isZero(0.0)) {
    out.state.kappa_last = 1.0;
    verify_fallback();
    return out;
  }
  out.state.kappa_last = 0.0;
  if (any_barrier_active(x, setup.constraints)) {
    verify_fallback();
    return out;
  }

  auto candidate = [&](double kappa) {
    return kappa == 1.0 ? x_des_final
                        : OrbitalElements::from_vec(gs.x_des_virtual.vec() + kappa * diff);
  };
  auto feasible = [&](double kappa) {
    const OrbitalElements cand = candidate(kappa);
    return check(cand, reset_weights(x, cand, setup.constraints, w));
  };

  double kappa = 0.0;
  if (feasible(1.0)) {
    kappa = 1.0;
  } else {
    double lo = 0.0;
    double hi = 1.0;
    for (int k = 0; k < gcfg.bisection_iters; ++k) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    kappa = lo;
  }

  if (kappa > 0.0) {
    const OrbitalElements cand = candidate(kappa);
    if (gcfg.delta_rejection && kappa < 1.0 &&
        weighted_distance(w.p, cand, gs.x_des_virtual) < gcfg.delta) {
      out.delta_rejected = true;
      kappa = 0.0;
    } else {
      out.state.x_des_virtual = cand;
      out.state.kappa_last = kappa;
      out.weights = reset_weights(x, cand, setup.constraints, w);
      out.target_changed = true;
      out.terminal_checked = true;
      out.terminal_ok = true;  // only feasible candidates reach here
    }
  }
  if (kappa == 0.0) verify_fallback();
  return out;
}

} // namespace gvc
