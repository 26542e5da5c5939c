#include "gvc/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gvc/errors.hpp"

namespace gvc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// 5th minus 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

} // namespace

template <int N>
double DormandPrince45<N>::error_norm(const State& err, const State& y0,
                                      const State& y1) const {
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y0(k)), std::abs(y1(k)));
    const double r = err(k) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / N);
}

template <int N>
double DormandPrince45<N>::initial_step(const Rhs& f, double t0, const State& y0,
                                        const State& f0, double span) const {
  // Hairer, Norsett & Wanner starting step heuristic.
  const State zero = State::Zero();
  const double d0 = error_norm(y0, zero, y0);
  const double d1n = error_norm(f0, zero, y0);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  const State y1 = y0 + h0 * f0;
  const State f1 = f(t0 + h0, y1);
  const double d2 = error_norm(f1 - f0, zero, y0) / h0;
  const double dmax = std::max(d1n, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, span});
}

template <int N>
void DormandPrince45<N>::integrate(const Rhs& f, State& y, double t0, double t1,
                                   std::span<const double> samples, const Observer& observer) {
  if (t1 < t0) throw IntegrationFailure("integration end precedes start");
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] <= t0) ++next_sample;
  if (t1 == t0) return;

  double t = t0;
  State k1 = f(t, y);
  const double span = t1 - t0;
  double h = h_next_ > 0.0 ? h_next_ : initial_step(f, t0, y, k1, span);
  if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
  bool last_rejected = false;
  long steps = 0;

  while (t < t1) {
    if (++steps > opts_.max_steps) {
      throw IntegrationFailure("step budget exhausted at t = " + std::to_string(t));
    }
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) {
      throw IntegrationFailure("step size underflow at t = " + std::to_string(t));
    }
    double h_unclipped = h;
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    State k2, k3, k4, k5, k6, k7, y_new;
    try {
      k2 = f(t + c2 * h, y + h * (a21 * k1));
      k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f(t + h, y_new);
    } catch (const Error&) {
      // A trial stage left the model's domain; retry with a shorter step and
      // surface the model error only once the step cannot shrink further.
      ++rejected_;
      h *= 0.25;
      last_rejected = true;
      if (h < h_min) throw;
      continue;
    }

    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y_new);
    if (!std::isfinite(en)) {
      ++rejected_;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    if (en <= 1.0) {
      ++accepted_;
      const double t_new = last ? t1 : t + h;
      if (next_sample < samples.size() && samples[next_sample] <= t_new) {
        const State ydiff = y_new - y;
        const State bspl = h * k1 - ydiff;
        const State r4 = ydiff - h * k7 - bspl;
        const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_sample < samples.size() && samples[next_sample] <= t_new) {
          const double ts = samples[next_sample];
          if (ts == t_new) {
            observer(ts, y_new);
          } else {
            const double s = (ts - t) / h;
            const double s1 = 1.0 - s;
            const State ys = y + s * (ydiff + s1 * (bspl + s * (r4 + s1 * r5)));
            observer(ts, ys);
          }
          ++next_sample;
        }
      }
      y = y_new;
      k1 = k7;
      t = t_new;

      double fac = en == 0.0 ? kMaxFactor : kSafety * std::pow(en, -0.2);
      fac = std::clamp(fac, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      h *= fac;
      if (last) h = std::max(h, h_unclipped);
      if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
      last_rejected = false;
    } else {
      ++rejected_;
      h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  h_next_ = h;
}

template class DormandPrince45<2>;
template class DormandPrince45<6>;

namespace ros {

// RODAS4 tableau (Hairer & Wanner), in the W-transformed form where the stage
// increments g_k solve (I/(gamma h) - J) g_k = rhs_k.
constexpr double gamma = 0.25;
constexpr double d1 = 0.25, d2 = -0.1043, d3 = 0.1035, d4 = 0.3620000000000023e-01;
constexpr double c2 = 0.386, c3 = 0.21, c4 = 0.63;
constexpr double c21 = -0.5668800000000000e+01;
constexpr double a21 = 0.1544000000000000e+01;
constexpr double c31 = -0.2430093356833875e+01, c32 = -0.2063599157091915e+00;
constexpr double a31 = 0.9466785280815826e+00, a32 = 0.2557011698983284e+00;
constexpr double c41 = -0.1073529058151375e+00, c42 = -0.9594562251023355e+01,
                 c43 = -0.2047028614809616e+02;
constexpr double a41 = 0.3314825187068521e+01, a42 = 0.2896124015972201e+01,
                 a43 = 0.9986419139977817e+00;
constexpr double c51 = 0.7496443313967647e+01, c52 = -0.1024680431464352e+02,
                 c53 = -0.3399990352819905e+02, c54 = 0.1170890893206160e+02;
constexpr double a51 = 0.1221224509226641e+01, a52 = 0.6019134481288629e+01,
                 a53 = 0.1253708332932087e+02, a54 = -0.6878860361058950e+00;
constexpr double c61 = 0.8083246795921522e+01, c62 = -0.7981132988064893e+01,
                 c63 = -0.3152159432874371e+02, c64 = 0.1631930543123136e+02,
                 c65 = -0.6058818238834054e+01;
// Continuous extension.
constexpr double d21 = 0.1012623508344586e+02, d22 = -0.7487995877610167e+01,
                 d23 = -0.3480091861555747e+02, d24 = -0.7992771707568823e+01,
                 d25 = 0.1025137723295662e+01;
constexpr double d31 = -0.6762803392801253e+00, d32 = 0.6087714651680015e+01,
                 d33 = 0.1643084320892478e+02, d34 = 0.2476722511418386e+02,
                 d35 = -0.6594389125716872e+01;

} // namespace ros

template <int N>
double Rosenbrock4<N>::error_norm(const State& err, const State& y0, const State& y1) const {
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y0(k)), std::abs(y1(k)));
    const double r = err(k) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / N);
}

template <int N>
void Rosenbrock4<N>::integrate(const Rhs& f, State& y, double t0, double t1,
                               std::span<const double> samples, const Observer& observer) {
  using Matrix = Eigen::Matrix<double, N, N>;
  if (t1 < t0) throw IntegrationFailure("integration end precedes start");
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] <= t0) ++next_sample;
  if (t1 == t0) return;

  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const double x_floor = opts_.atol / opts_.rtol;
  // Barrier boundary layers can be far thinner than sqrt(eps)*|y|, so the
  // Jacobian probe is kept well inside the integration tolerance.
  const double probe = std::min(sqrt_eps, 0.1 * opts_.rtol);

  double t = t0;
  State f0 = f(t, y);
  const double span = t1 - t0;
  double h = h_next_;
  if (h <= 0.0) {
    const State zero = State::Zero();
    const double d0 = error_norm(y, zero, y);
    const double d1n = error_norm(f0, zero, y);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  }
  h = std::min(h, span);
  if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
  bool last_rejected = false;
  bool have_jacobian = false;
  Matrix jac;
  State dfdt;
  long steps = 0;

  while (t < t1) {
    if (++steps > opts_.max_steps) {
      throw IntegrationFailure("step budget exhausted at t = " + std::to_string(t));
    }
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) {
      throw IntegrationFailure("step size underflow at t = " + std::to_string(t));
    }
    const double h_unclipped = h;
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    State g1, g2, g3, g4, g5, y_new, err, f_new;
    try {
      if (!have_jacobian) {
        // Forward differences; rejected steps reuse the matrix.
        for (int j = 0; j < N; ++j) {
          State yp = y;
          yp(j) += probe * std::max(std::abs(y(j)), x_floor);
          jac.col(j) = (f(t, yp) - f0) / (yp(j) - y(j));
        }
        const double dt = sqrt_eps * std::max(1.0, std::abs(t));
        dfdt = (f(t + dt, y) - f0) / dt;
        have_jacobian = true;
      }
      const Matrix w = Matrix::Identity() / (ros::gamma * h) - jac;
      const Eigen::PartialPivLU<Matrix> lu(w);
      const double ih = 1.0 / h;

      g1 = lu.solve(f0 + h * ros::d1 * dfdt);
      State fs = f(t + ros::c2 * h, y + ros::a21 * g1);
      g2 = lu.solve(fs + h * ros::d2 * dfdt + ros::c21 * ih * g1);
      fs = f(t + ros::c3 * h, y + ros::a31 * g1 + ros::a32 * g2);
      g3 = lu.solve(fs + h * ros::d3 * dfdt + ih * (ros::c31 * g1 + ros::c32 * g2));
      fs = f(t + ros::c4 * h, y + ros::a41 * g1 + ros::a42 * g2 + ros::a43 * g3);
      g4 = lu.solve(fs + h * ros::d4 * dfdt +
                    ih * (ros::c41 * g1 + ros::c42 * g2 + ros::c43 * g3));
      const State y5 = y + ros::a51 * g1 + ros::a52 * g2 + ros::a53 * g3 + ros::a54 * g4;
      fs = f(t + h, y5);
      g5 = lu.solve(fs + ih * (ros::c51 * g1 + ros::c52 * g2 + ros::c53 * g3 + ros::c54 * g4));
      const State y6 = y5 + g5;
      fs = f(t + h, y6);
      err = lu.solve(fs + ih * (ros::c61 * g1 + ros::c62 * g2 + ros::c63 * g3 + ros::c64 * g4 +
                                ros::c65 * g5));
      y_new = y6 + err;
    } catch (const Error&) {
      // A trial stage left the model's domain; retry with a shorter step and
      // surface the model error only once the step cannot shrink further.
      ++rejected_;
      h *= 0.25;
      last_rejected = true;
      if (h < h_min) throw;
      continue;
    }

    const double en = error_norm(err, y, y_new);
    if (!std::isfinite(en) || !y_new.allFinite()) {
      ++rejected_;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    if (en <= 1.0) {
      const double t_new = last ? t1 : t + h;
      try {
        f_new = f(t_new, y_new);
      } catch (const Error&) {
        ++rejected_;
        h *= 0.25;
        last_rejected = true;
        if (h < h_min) throw;
        continue;
      }
      ++accepted_;
      if (next_sample < samples.size() && samples[next_sample] <= t_new) {
        const State cont3 = ros::d21 * g1 + ros::d22 * g2 + ros::d23 * g3 + ros::d24 * g4 +
                            ros::d25 * g5;
        const State cont4 = ros::d31 * g1 + ros::d32 * g2 + ros::d33 * g3 + ros::d34 * g4 +
                            ros::d35 * g5;
        while (next_sample < samples.size() && samples[next_sample] <= t_new) {
          const double ts = samples[next_sample];
          if (ts == t_new) {
            observer(ts, y_new);
          } else {
            const double s = (ts - t) / h;
            const double s1 = 1.0 - s;
            // y (1 - s) + s (y_new + (1 - s)(cont3 + s cont4)), arranged so
            // components that did not move stay bit-exact.
            const State ys = y + s * ((y_new - y) + s1 * (cont3 + s * cont4));
            observer(ts, ys);
          }
          ++next_sample;
        }
      }
      y = y_new;
      f0 = f_new;
      t = t_new;
      have_jacobian = false;

      double fac = en == 0.0 ? kMaxFactor : kSafety * std::pow(en, -0.25);
      fac = std::clamp(fac, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      h *= fac;
      if (last) h = std::max(h, h_unclipped);
      if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
      last_rejected = false;
    } else {
      ++rejected_;
      h *= std::max(kMinFactor, kSafety * std::pow(en, -0.25));
      last_rejected = true;
    }
  }
  h_next_ = h;
}

template class Rosenbrock4<2>;
template class Rosenbrock4<6>;

ElementIntegrator::ElementIntegrator(const IntegratorOptions& opts)
    : impl_(opts.method == IntegratorMethod::DormandPrince45
                ? decltype(impl_){std::in_place_type<DormandPrince45<6>>, opts}
                : decltype(impl_){std::in_place_type<Rosenbrock4<6>>, opts}) {}

void ElementIntegrator::integrate(const Rhs& f, ElementState& y, double t0, double t1,
                                  std::span<const double> samples, const Observer& observer) {
  std::visit([&](auto& s) { s.integrate(f, y, t0, t1, samples, observer); }, impl_);
}

long ElementIntegrator::accepted_steps() const {
  return std::visit([](const auto& s) { return s.accepted_steps(); }, impl_);
}

long ElementIntegrator::rejected_steps() const {
  return std::visit([](const auto& s) { return s.rejected_steps(); }, impl_);
}

std::string method_name(IntegratorMethod m) {
  return m == IntegratorMethod::DormandPrince45 ? "dopri5" : "rosenbrock4";
}

ElementState closed_loop_rhs(const FeedbackLaw& law, const BodyParams& body, double t,
                             const ElementState& s) {
  const OrbitalElements x = unpack_elements(s);
  const double theta = s(5);
  const ControlAccel u = law(x, theta, t);
  const StateRates rates = state_derivative(x, theta, u, body);
  ElementState d;
  d.head<5>() = rates.elements;
  d(5) = rates.theta;
  return d;
}

std::vector<double> sample_times(double t0, double t1, double period, bool include_end) {
  std::vector<double> out;
  if (period > 0.0) {
    const double tol = 1e-9 * period;
    long k = static_cast<long>(std::floor(t0 / period + 1e-9)) + 1;
    for (;; ++k) {
      const double ts = static_cast<double>(k) * period;
      if (ts > t1 + tol) break;
      out.push_back(std::min(ts, t1));
    }
    if (!out.empty() && std::abs(out.back() - t1) <= tol) out.back() = t1;
  }
  if (include_end && t1 > t0 && (out.empty() || out.back() < t1)) out.push_back(t1);
  return out;
}

PropagationLog propagate(const OrbitalElements& x0, double theta0, const FeedbackLaw& law,
                         const BodyParams& body, double t_span, double log_period,
                         const IntegratorOptions& opts) {
  PropagationLog log;
  log.push_back({0.0, x0, theta0});
  ElementState y = pack_state(x0, theta0);
  const auto times = sample_times(0.0, t_span, log_period, true);
  ElementIntegrator stepper(opts);
  stepper.integrate([&](double t, const ElementState& s) { return closed_loop_rhs(law, body, t, s); },
                    y, 0.0, t_span, times, [&](double t, const ElementState& s) {
                      log.push_back({t, unpack_elements(s), s(5)});
                    });
  return log;
}

ElementState propagate_to(const OrbitalElements& x0, double theta0, const FeedbackLaw& law,
                          const BodyParams& body, double t_span, const IntegratorOptions& opts) {
  ElementState y = pack_state(x0, theta0);
  ElementIntegrator stepper(opts);
  stepper.integrate([&](double t, const ElementState& s) { return closed_loop_rhs(law, body, t, s); },
                    y, 0.0, t_span, {}, [](double, const ElementState&) {});
  return y;
}

} // namespace gvc
