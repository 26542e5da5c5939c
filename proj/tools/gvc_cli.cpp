// Command-line driver for the closed-loop transfer experiments.
//
// Exit codes: 0 success, 1 constraint violation detected, 2 configuration
// error, 3 numerical failure.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gvc/csv.hpp"
#include "gvc/errors.hpp"
#include "gvc/harness.hpp"
#include "gvc/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Range {
  double lo, hi, step;
};

Range parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(gvc::parse_number(item));
  if (parts.size() != 3) throw gvc::ParseError("range '" + text + "' must be lo:hi:step");
  return {parts[0], parts[1], parts[2]};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(gvc::parse_number(item));
  return out;
}

gvc::ScenarioConfig load(const std::string& name) {
  return gvc::load_scenario(gvc::resolve_scenario(name));
}

bool report_violations(const gvc::ScenarioConfig& cfg, const gvc::RunResult& run) {
  const gvc::RunSummary s = gvc::summarize(run);
  bool control_ok = true;
  for (const auto& r : run.log) control_ok = control_ok && gvc::within_control_set(r.u, cfg.saturation, 1e-12);
  std::cout << "min periapsis slack [km]: " << s.min_c1_slack << "\n"
            << "min eccentricity slack:    " << s.min_c3_slack << "\n"
            << "max |u| [km/s^2]:          " << s.max_u_norm << "\n";
  if (run.converged) {
    std::cout << "entered Q(X_des) at " << *run.convergence_time / 3600.0 << " h\n";
  } else {
    std::cout << "did not enter Q(X_des)\n";
  }
  return s.min_c1_slack < 0.0 || s.min_c3_slack < 0.0 || !control_ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barrier-Lyapunov orbital transfer simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Run one closed-loop scenario");
  simulate->add_option("scenario", scenario, "Scenario file or shipped name")->required();
  simulate->add_option("--out", out, "Trajectory CSV");

  std::string a_range = "7378:30378:1000";
  std::string e_range = "0.05:0.85:0.1";
  double horizon_h = 40.0;
  unsigned threads = 0;
  auto* grid = app.add_subcommand("grid", "Convergence study over an (a, e) mesh");
  grid->add_option("scenario", scenario)->required();
  grid->add_option("--a-range", a_range, "lo:hi:step in km");
  grid->add_option("--e-range", e_range, "lo:hi:step");
  grid->add_option("--horizon", horizon_h, "Horizon in hours");
  grid->add_option("--threads", threads, "Worker threads (0: all cores)");
  grid->add_option("--out", out, "Grid CSV");

  int points = 50;
  auto* sweep = app.add_subcommand("c0-sweep", "Terminal-set level along the X(0) -> X_des segment");
  sweep->add_option("scenario", scenario)->required();
  sweep->add_option("--points", points, "Number of virtual targets")->check(CLI::Range(2, 1000000));
  sweep->add_option("--out", out, "Sweep CSV");

  std::string horizons = "15,4";
  auto* governor = app.add_subcommand("governor", "Compare governor horizons with the baseline");
  governor->add_option("scenario", scenario)->required();
  governor->add_option("--horizons", horizons, "Comma-separated prediction horizons in hours");
  governor->add_option("--out", out, "Output prefix; writes <prefix>_summary.csv and one log per run");

  auto* validate = app.add_subcommand("validate", "Parse and check a scenario");
  validate->add_option("scenario", scenario)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate) {
      const auto cfg = load(scenario);
      std::cout << cfg.name << ": ok" << (cfg.governor ? " (governor enabled)" : "") << "\n";
      return kExitOk;
    }
    if (*simulate) {
      const auto cfg = load(scenario);
      const auto start = std::chrono::steady_clock::now();
      gvc::RunOptions opts;
      opts.keep_partial_on_failure = true;
      const gvc::RunResult run = gvc::run_closed_loop(cfg, opts);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!out.empty()) gvc::write_csv(out, run.log);
      std::cout << cfg.name << ": " << run.log.size() << " samples, " << run.integrator_steps
                << " steps, " << secs << " s\n";
      const bool violated = report_violations(cfg, run);
      if (run.failure) std::cerr << "run stopped early: " << *run.failure << "\n";
      // A violation seen before the failure is the more useful verdict.
      if (violated) return kExitViolation;
      return run.failure ? kExitNumerical : kExitOk;
    }
    if (*grid) {
      const auto cfg = load(scenario);
      const Range ar = parse_range(a_range);
      const Range er = parse_range(e_range);
      gvc::GridSpec spec{ar.lo, ar.hi, ar.step, er.lo, er.hi, er.step, horizon_h * 3600.0, threads};
      const auto result = gvc::run_grid_study(cfg, spec);
      if (!out.empty()) gvc::write_csv(out, result);
      std::cout << result.converged_count() << " of " << result.feasible_count()
                << " feasible cells converged (" << result.cells.size() << " cells)\n";
      for (const auto& c : result.cells) {
        if (!c.error.empty()) {
          std::cerr << "cell a=" << c.a0 << " e=" << c.e0 << ": " << c.error << "\n";
        }
      }
      return kExitOk;
    }
    if (*sweep) {
      const auto cfg = load(scenario);
      const auto table = gvc::run_c0_sweep(cfg.x0, cfg.x_des, points, cfg.initial_weights(),
                                           cfg.constraints);
      if (!out.empty()) gvc::write_csv(out, table);
      std::cout.precision(9);
      std::cout << "c0 at X(0):   " << table.front().c0 << "\n"
                << "c0 at X_des:  " << table.back().c0 << " (a = " << table.back().x_virtual.a
                << " km)\n";
      return kExitOk;
    }
    if (*governor) {
      const auto cfg = load(scenario);
      std::vector<double> hor;
      for (double h : parse_list(horizons)) hor.push_back(h * 3600.0);
      const auto cmp = gvc::run_governor_comparison(cfg, hor);
      if (!out.empty()) {
        gvc::write_csv(out + "_summary.csv", cmp);
        gvc::write_csv(out + "_baseline.csv", cmp.baseline.result.log);
        for (const auto& r : cmp.governed) {
          std::ostringstream name;
          name << out << "_h" << r.t_hor / 3600.0 << ".csv";
          gvc::write_csv(name.str(), r.result.log);
        }
      }
      auto show = [](const char* label, const gvc::ComparisonRun& r) {
        std::cout << label << ": ";
        if (r.result.converged) {
          std::cout << "converged at " << *r.result.convergence_time / 3600.0 << " h";
        } else {
          std::cout << "not converged";
        }
        std::cout << ", min c1 " << r.summary.min_c1_slack << " km, max |u| "
                  << r.summary.max_u_norm << "\n";
      };
      show("baseline", cmp.baseline);
      bool violated = cmp.baseline.summary.min_c1_slack < 0 || cmp.baseline.summary.min_c3_slack < 0;
      for (const auto& r : cmp.governed) {
        std::ostringstream label;
        label << "t_hor " << r.t_hor / 3600.0 << " h";
        show(label.str().c_str(), r);
        violated = violated || r.summary.min_c1_slack < 0 || r.summary.min_c3_slack < 0;
      }
      return violated ? kExitViolation : kExitOk;
    }
  } catch (const gvc::ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gvc::ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gvc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gvc::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
