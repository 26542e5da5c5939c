#include "gvc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "gvc/errors.hpp"

namespace gvc {

namespace {

[[noreturn]] void rethrow_at(double t) {
  std::ostringstream where;
  where.precision(10);
  where << " (simulation time " << t << " s)";
  try {
    throw;
  } catch (const EccentricitySingularity& e) {
    throw EccentricitySingularity(e.what() + where.str());
  } catch (const InclinationSingularity& e) {
    throw InclinationSingularity(e.what() + where.str());
  } catch (const IntegrationFailure& e) {
    throw IntegrationFailure(e.what() + where.str());
  }
}

TrajectoryRecord make_record(double t, const ElementState& s, const LyapunovController& ctl) {
  TrajectoryRecord rec;
  rec.t = t;
  rec.x = unpack_elements(s);
  rec.theta = s(5);
  rec.u = ctl(rec.x, rec.theta);
  const BarrierTerms b = barrier_terms(rec.x, ctl.constraints, ctl.weights);
  rec.v = lyapunov_value(rec.x, ctl.target, ctl.constraints, ctl.weights);
  rec.b1 = b.b1;
  rec.b2 = b.b2;
  rec.q1 = ctl.weights.q1;
  rec.q2 = ctl.weights.q2;
  rec.c1_slack = periapsis_slack(rec.x, ctl.constraints);
  rec.c3_slack = eccentricity_slack(rec.x, ctl.constraints);
  rec.u_norm = rec.u.norm();
  return rec;
}

/// Next multiple of `period` strictly after t (within round-off).
double next_multiple(double t, double period) {
  const double k = std::floor(t / period + 1e-9) + 1.0;
  return k * period;
}

} // namespace

RunResult run_closed_loop(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  RunResult out;
  const ClosedLoopSetup setup = cfg.setup();
  Weights w = cfg.initial_weights();
  OrbitalElements target = cfg.x_des;

  try {
    out.c0_target = terminal_level(cfg.x_des, w, cfg.constraints);
  } catch (const InfeasibleTerminalSet&) {
    out.c0_target = 0.0;
  }

  GovernorState gs;
  TerminalLevelCache cache;
  if (cfg.governor) {
    gs = initialize_governor(cfg.x0, cfg.constraints);
    target = gs.x_des_virtual;
    if (w.barriers) w = reset_weights(cfg.x0, target, cfg.constraints, w);
  }

  const double event_period = cfg.governor ? cfg.governor->update_period : cfg.reset_period;

  ElementState y = pack_state(cfg.x0, cfg.theta0);
  double t = 0.0;
  double t_eval = 0.0;
  bool stop = false;

  auto observe = [&](double ts, const ElementState& s, const LyapunovController& ctl) {
    TrajectoryRecord rec = make_record(ts, s, ctl);
    if (cfg.governor) {
      GovernorRecord g;
      g.kappa = gs.kappa_last;
      g.x_virtual = gs.x_des_virtual;
      g.in_terminal = in_terminal_set(rec.x, gs.x_des_virtual, ctl.weights,
                                      cache.get(gs.x_des_virtual, ctl.weights, cfg.constraints));
      rec.governor = g;
    }
    if (!out.converged && out.c0_target > 0.0 &&
        in_terminal_set(rec.x, cfg.x_des, ctl.weights, out.c0_target)) {
      out.converged = true;
      out.convergence_time = ts;
      if (opts.stop_on_convergence) stop = true;
    }
    if (opts.keep_log) out.log.push_back(std::move(rec));
  };

  ElementIntegrator stepper(cfg.integrator);
  observe(0.0, y, cfg.controller(target, w));

  try {
    while (t < cfg.t_final && !stop) {
      const OrbitalElements x = unpack_elements(y);
      if (cfg.governor) {
        const GovernorUpdate upd = governor_update(gs, x, y(5), cfg.x_des, w, *cfg.governor,
                                                   setup, cache);
        gs = upd.state;
        w = upd.weights;
        target = gs.x_des_virtual;
        out.governor_events.push_back({t, upd.state.kappa_last, upd.target_changed,
                                       upd.terminal_checked, upd.terminal_ok,
                                       upd.delta_rejected, upd.predictions});
      } else if (t > 0.0 && cfg.reset_period > 0.0 && w.barriers &&
                 !any_barrier_active(x, cfg.constraints)) {
        w = reset_weights(x, target, cfg.constraints, w);
        ++out.resets_applied;
      }

      double t_next = cfg.t_final;
      if (event_period > 0.0) t_next = std::min(t_next, next_multiple(t, event_period));

      const LyapunovController ctl = cfg.controller(target, w);
      const FeedbackLaw law = ctl.law();
      const auto samples = sample_times(t, t_next, cfg.log_period, t_next == cfg.t_final);
      stepper.integrate(
          [&](double tt, const ElementState& s) {
            t_eval = tt;
            return closed_loop_rhs(law, cfg.body, tt, s);
          },
          y, t, t_next, samples,
          [&](double ts, const ElementState& s) { observe(ts, s, ctl); });
      t = t_next;
    }
  } catch (const Error&) {
    if (!opts.keep_partial_on_failure) rethrow_at(t_eval);
    try {
      rethrow_at(t_eval);
    } catch (const Error& e) {
      out.failure = e.what();
    }
  }
  out.integrator_steps = stepper.accepted_steps();
  return out;
}

RunSummary summarize(const RunResult& run) {
  RunSummary s;
  s.min_c1_slack = std::numeric_limits<double>::infinity();
  s.min_c3_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < run.log.size(); ++k) {
    const auto& r = run.log[k];
    s.min_c1_slack = std::min(s.min_c1_slack, r.c1_slack);
    s.min_c3_slack = std::min(s.min_c3_slack, r.c3_slack);
    s.max_u_norm = std::max(s.max_u_norm, r.u_norm);
    s.max_abs_channel = s.max_abs_channel.cwiseMax(r.u.vec().cwiseAbs());
    if (k > 0 && !r.governor) s.max_v_increase = std::max(s.max_v_increase, r.v - run.log[k - 1].v);
  }
  return s;
}

std::size_t GridStudyResult::feasible_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return c.feasible; }));
}

std::size_t GridStudyResult::converged_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return c.converged; }));
}

std::vector<double> mesh(double lo, double hi, double step) {
  std::vector<double> out;
  if (!(step > 0.0)) throw ValidationError("mesh step must be positive");
  for (long k = 0;; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    if (v > hi + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

GridStudyResult run_grid_study(const ScenarioConfig& base, const GridSpec& spec) {
  if (!(spec.horizon > 0.0)) throw ValidationError("grid horizon must be positive");
  GridStudyResult result;
  for (double a : mesh(spec.a_lo, spec.a_hi, spec.a_step)) {
    for (double e : mesh(spec.e_lo, spec.e_hi, spec.e_step)) {
      GridCell cell;
      cell.a0 = a;
      cell.e0 = e;
      OrbitalElements x0 = base.x0;
      x0.a = a;
      x0.e = e;
      cell.feasible = x0.valid() && instantaneously_feasible(x0, base.constraints);
      result.cells.push_back(cell);
    }
  }
  try {
    result.c0_target = terminal_level(base.x_des, base.initial_weights(), base.constraints);
  } catch (const InfeasibleTerminalSet&) {
    result.c0_target = 0.0;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < result.cells.size(); k = next++) {
      GridCell& cell = result.cells[k];
      if (!cell.feasible) continue;
      ScenarioConfig cfg = base;
      cfg.x0.a = cell.a0;
      cfg.x0.e = cell.e0;
      cfg.q1.reset();
      cfg.q2.reset();
      cfg.t_final = spec.horizon;
      try {
        const RunResult run = run_closed_loop(cfg, {.stop_on_convergence = true, .keep_log = false});
        cell.converged = run.converged;
        cell.convergence_time = run.convergence_time;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  unsigned n = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, result.cells.size())));
  std::vector<std::jthread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  return result;
}

std::vector<C0Point> run_c0_sweep(const OrbitalElements& x0, const OrbitalElements& x_des,
                                  int n_points, const Weights& w, const ConstraintConfig& cfg) {
  if (n_points < 2) throw ValidationError("c0 sweep needs at least 2 points");
  std::vector<C0Point> out;
  for (int k = 0; k < n_points; ++k) {
    C0Point pt;
    pt.s = static_cast<double>(k) / (n_points - 1);
    pt.x_virtual = k == n_points - 1
                       ? x_des
                       : OrbitalElements::from_vec(x0.vec() + pt.s * (x_des.vec() - x0.vec()));
    try {
      pt.c0 = terminal_level(pt.x_virtual, w, cfg);
      pt.ok = true;
    } catch (const InfeasibleTerminalSet& e) {
      pt.error = e.what();
    }
    out.push_back(pt);
  }
  return out;
}

GovernorComparison run_governor_comparison(const ScenarioConfig& cfg,
                                           const std::vector<double>& horizons) {
  GovernorComparison cmp;
  ScenarioConfig base = cfg;
  base.governor.reset();
  cmp.baseline.result = run_closed_loop(base);
  cmp.baseline.summary = summarize(cmp.baseline.result);
  for (double t_hor : horizons) {
    ScenarioConfig gov = cfg;
    if (!gov.governor) gov.governor = GovernorConfig{};
    gov.governor->t_hor = t_hor;
    ComparisonRun run;
    run.t_hor = t_hor;
    run.result = run_closed_loop(gov);
    run.summary = summarize(run.result);
    cmp.governed.push_back(std::move(run));
  }
  return cmp;
}

} // namespace gvc
