#include "gvc/csv.hpp"

#include <cstdio>
#include <fstream>

#include "gvc/errors.hpp"

namespace gvc {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void join(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) os << ',';
    os << fields[k];
  }
  os << '\n';
}

std::string optional_time(const std::optional<double>& t) { return t ? format_double(*t) : ""; }

} // namespace

std::vector<std::string> trajectory_columns(bool with_governor) {
  std::vector<std::string> cols{
      "t[s]",      "a[km]",       "e[-]",        "i[rad]",         "raan[rad]",
      "argp[rad]", "theta[rad]",  "s[km/s^2]",   "t_acc[km/s^2]",  "w[km/s^2]",
      "v[-]",      "b1[-]",       "b2[-]",       "q1[km^-2]",      "q2[-]",
      "c1_slack[km]", "c3_slack[-]", "u_norm[km/s^2]"};
  if (with_governor) {
    for (const char* c : {"kappa[-]", "xv_a[km]", "xv_e[-]", "xv_i[rad]", "xv_raan[rad]",
                          "xv_argp[rad]", "in_terminal[-]"}) {
      cols.emplace_back(c);
    }
  }
  return cols;
}

void write_csv(std::ostream& os, const std::vector<TrajectoryRecord>& log) {
  const bool gov = !log.empty() && log.front().governor.has_value();
  join(os, trajectory_columns(gov));
  for (const auto& r : log) {
    std::vector<std::string> f;
    for (double v : {r.t, r.x.a, r.x.e, r.x.i, r.x.raan, r.x.argp, r.theta, r.u.s, r.u.t, r.u.w,
                     r.v, r.b1, r.b2, r.q1, r.q2, r.c1_slack, r.c3_slack, r.u_norm}) {
      f.push_back(format_double(v));
    }
    if (gov && r.governor) {
      const auto& g = *r.governor;
      for (double v : {g.kappa, g.x_virtual.a, g.x_virtual.e, g.x_virtual.i, g.x_virtual.raan,
                       g.x_virtual.argp}) {
        f.push_back(format_double(v));
      }
      f.push_back(g.in_terminal ? "1" : "0");
    }
    join(os, f);
  }
}

void write_csv(std::ostream& os, const GridStudyResult& grid) {
  join(os, {"a0[km]", "e0[-]", "feasible[-]", "converged[-]", "convergence_time[s]", "error"});
  for (const auto& c : grid.cells) {
    join(os, {format_double(c.a0), format_double(c.e0), c.feasible ? "1" : "0",
              c.converged ? "1" : "0", optional_time(c.convergence_time),
              c.error.empty() ? "" : "\"" + c.error + "\""});
  }
}

void write_csv(std::ostream& os, const std::vector<C0Point>& sweep) {
  join(os, {"s[-]", "a[km]", "e[-]", "i[rad]", "raan[rad]", "argp[rad]", "c0[-]", "ok[-]"});
  for (const auto& p : sweep) {
    join(os, {format_double(p.s), format_double(p.x_virtual.a), format_double(p.x_virtual.e),
              format_double(p.x_virtual.i), format_double(p.x_virtual.raan),
              format_double(p.x_virtual.argp), p.ok ? format_double(p.c0) : "",
              p.ok ? "1" : "0"});
  }
}

void write_csv(std::ostream& os, const GovernorComparison& cmp) {
  join(os, {"t_hor[s]", "converged[-]", "convergence_time[s]", "min_c1_slack[km]",
            "min_c3_slack[-]", "max_u_norm[km/s^2]", "governor_updates[-]", "predictions[-]"});
  auto row = [&](const ComparisonRun& r) {
    int predictions = 0;
    for (const auto& ev : r.result.governor_events) predictions += ev.predictions;
    join(os, {format_double(r.t_hor), r.result.converged ? "1" : "0",
              optional_time(r.result.convergence_time), format_double(r.summary.min_c1_slack),
              format_double(r.summary.min_c3_slack), format_double(r.summary.max_u_norm),
              std::to_string(r.result.governor_events.size()), std::to_string(predictions)});
  };
  row(cmp.baseline);
  for (const auto& r : cmp.governed) row(r);
}

template <typename T>
void write_csv(const std::filesystem::path& path, const T& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(os, data);
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

template void write_csv(const std::filesystem::path&, const std::vector<TrajectoryRecord>&);
template void write_csv(const std::filesystem::path&, const GridStudyResult&);
template void write_csv(const std::filesystem::path&, const std::vector<C0Point>&);
template void write_csv(const std::filesystem::path&, const GovernorComparison&);

} // namespace gvc
