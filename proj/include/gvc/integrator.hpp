#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gvc/dynamics.hpp"

namespace gvc {

enum class IntegratorMethod { Rosenbrock4, DormandPrince45 };

struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::Rosenbrock4;
  double rtol = 1e-9;
  double atol = 1e-9;
  double max_step = 0.0;  // 0: unbounded
  long max_steps = 50'000'000;
};

/**
 * Adaptive Dormand-Prince 5(4) stepper with the 4th-order continuous
 * extension for dense sampling.
 *
 * The step sequence depends only on the right-hand side, the initial state and
 * the interval end points. Sample requests never shorten a step, so two
 * integrations of the same problem agree bit-for-bit at the end point
 * regardless of how they are logged.
 */
template <int N>
class DormandPrince45 {
public:
  using State = Eigen::Matrix<double, N, 1>;
  using Rhs = std::function<State(double, const State&)>;
  using Observer = std::function<void(double, const State&)>;

  explicit DormandPrince45(IntegratorOptions opts = {}) : opts_(opts) {}

  /// Advances y from t0 to t1 (t1 >= t0). Each entry of `samples` must lie in
  /// (t0, t1] and the list must be sorted; the observer sees them in order.
  void integrate(const Rhs& f, State& y, double t0, double t1, std::span<const double> samples,
                 const Observer& observer);

  /// Step size proposed for the next call; 0 means "choose automatically".
  double next_step() const { return h_next_; }
  void set_next_step(double h) { h_next_ = h; }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

private:
  double error_norm(const State& err, const State& y0, const State& y1) const;
  double initial_step(const Rhs& f, double t0, const State& y0, const State& f0,
                      double span) const;

  IntegratorOptions opts_;
  double h_next_ = 0.0;
  long accepted_ = 0;
  long rejected_ = 0;
};

/**
 * Adaptive linearly implicit Rosenbrock 4(3) stepper (stiffly accurate,
 * L-stable) with a 3rd-order continuous extension. The Jacobian is formed by
 * forward differences of the right-hand side at the start of every step.
 *
 * Same stepping contract as DormandPrince45: steps land exactly on t1 and are
 * never shortened by sample requests.
 */
template <int N>
class Rosenbrock4 {
public:
  using State = Eigen::Matrix<double, N, 1>;
  using Rhs = std::function<State(double, const State&)>;
  using Observer = std::function<void(double, const State&)>;

  explicit Rosenbrock4(IntegratorOptions opts = {}) : opts_(opts) {}

  void integrate(const Rhs& f, State& y, double t0, double t1, std::span<const double> samples,
                 const Observer& observer);

  double next_step() const { return h_next_; }
  void set_next_step(double h) { h_next_ = h; }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

private:
  double error_norm(const State& err, const State& y0, const State& y1) const;

  IntegratorOptions opts_;
  double h_next_ = 0.0;
  long accepted_ = 0;
  long rejected_ = 0;
};

using ElementState = Eigen::Matrix<double, 6, 1>;  // [a e i raan argp theta]

inline ElementState pack_state(const OrbitalElements& x, double theta) {
  ElementState s;
  s << x.a, x.e, x.i, x.raan, x.argp, theta;
  return s;
}

inline OrbitalElements unpack_elements(const ElementState& s) {
  return {s(0), s(1), s(2), s(3), s(4)};
}

/// Runtime-selected stepper for the element state.
class ElementIntegrator {
public:
  using Rhs = std::function<ElementState(double, const ElementState&)>;
  using Observer = std::function<void(double, const ElementState&)>;

  explicit ElementIntegrator(const IntegratorOptions& opts = {});

  void integrate(const Rhs& f, ElementState& y, double t0, double t1,
                 std::span<const double> samples, const Observer& observer);
  long accepted_steps() const;
  long rejected_steps() const;

private:
  std::variant<Rosenbrock4<6>, DormandPrince45<6>> impl_;
};

std::string method_name(IntegratorMethod m);

/// Feedback law U = k(X, theta, t).
using FeedbackLaw =
    std::function<ControlAccel(const OrbitalElements&, double theta, double t)>;

struct PropagationSample {
  double t = 0.0;
  OrbitalElements x;
  double theta = 0.0;
};

using PropagationLog = std::vector<PropagationSample>;

/// Closed-loop GVE right-hand side, feedback evaluated at every stage.
ElementState closed_loop_rhs(const FeedbackLaw& law, const BodyParams& body, double t,
                             const ElementState& s);

/**
 * Integrates the GVEs under `law` for `t_span` seconds, sampling every
 * `log_period` seconds. The final sample is always at exactly t_span.
 */
PropagationLog propagate(const OrbitalElements& x0, double theta0, const FeedbackLaw& law,
                         const BodyParams& body, double t_span, double log_period,
                         const IntegratorOptions& opts = {});

/// Same integration as propagate() without the log; returns the end state.
ElementState propagate_to(const OrbitalElements& x0, double theta0, const FeedbackLaw& law,
                          const BodyParams& body, double t_span,
                          const IntegratorOptions& opts = {});

/// Sample times k*period in (t0, t1], plus t1 itself when `include_end`.
std::vector<double> sample_times(double t0, double t1, double period, bool include_end);

extern template class DormandPrince45<6>;
extern template class Rosenbrock4<6>;

} // namespace gvc
