#include "gvc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gvc/errors.hpp"

namespace gvc {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"body", {"mu"}},
      {"initial", {"a", "e", "i", "raan", "argp", "theta"}},
      {"target", {"a", "e", "i", "raan", "argp"}},
      {"weights", {"p", "q1", "q2", "barriers", "reset_period_h"}},
      {"constraints", {"r_min", "e_min", "u_max", "eps1", "eps2"}},
      {"saturation", {"mode", "bounds"}},
      {"governor",
       {"enabled", "t_hor_h", "update_period_h", "bisection_iters", "delta", "delta_rejection",
        "verify_fallback"}},
      {"integration", {"t_final_h", "log_period_s", "method", "rtol", "atol", "max_step_s"}},
  };
  return keys;
}

class Section {
public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  std::string required_raw(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw ParseError("[" + name_ + "] missing required key '" + key + "'");
    return *v;
  }

  double number(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? convert(key, *v) : fallback;
  }

  double required_number(const std::string& key) const {
    return convert(key, required_raw(key));
  }

  bool flag(const std::string& key, bool fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    const std::string s = boost::algorithm::to_lower_copy(*v);
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ParseError("[" + name_ + "] " + key + ": expected a boolean, got '" + *v + "'");
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<std::string> parts;
    const std::string v = required_raw(key);
    boost::algorithm::split(parts, v, boost::is_any_of(","));
    std::vector<double> out;
    for (auto& part : parts) out.push_back(convert(key, boost::algorithm::trim_copy(part)));
    return out;
  }

  /// "auto" maps to nullopt.
  std::optional<double> number_or_auto(const std::string& key) const {
    auto v = raw(key);
    if (!v || boost::algorithm::iequals(*v, "auto")) return std::nullopt;
    return convert(key, *v);
  }

private:
  double convert(const std::string& key, const std::string& value) const {
    try {
      return parse_number(value);
    } catch (const ParseError&) {
      throw ParseError("[" + name_ + "] " + key + ": cannot parse '" + value + "' as a number");
    }
  }

  std::string name_;
  const pt::ptree* tree_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

} // namespace

double parse_number(const std::string& input) {
  const std::string text = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(input));
  if (text.empty()) throw ParseError("empty number");

  auto plain = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ParseError("trailing characters in '" + s + "'");
    return v;
  };

  const auto pos = text.find("pi");
  if (pos == std::string::npos) return plain(text);

  double value = std::numbers::pi;
  const std::string head = boost::algorithm::trim_copy(text.substr(0, pos));
  std::string tail = boost::algorithm::trim_copy(text.substr(pos + 2));
  if (!head.empty()) {
    if (head == "-") {
      value = -value;
    } else {
      if (head.back() != '*') throw ParseError("malformed pi expression '" + input + "'");
      value = plain(boost::algorithm::trim_copy(head.substr(0, head.size() - 1))) * value;
    }
  }
  if (!tail.empty()) {
    if (tail.front() != '/') throw ParseError("malformed pi expression '" + input + "'");
    value /= plain(boost::algorithm::trim_copy(tail.substr(1)));
  }
  return value;
}

Weights ScenarioConfig::initial_weights() const {
  const double v0 = quadratic_value(Mat5(p_diag.asDiagonal()), x0, x_des);
  const WeightBounds auto_q = min_weights(v0, constraints);
  Weights w = Weights::diagonal(p_diag, q1.value_or(std::max(auto_q.q1, kWeightFloor)),
                                q2.value_or(std::max(auto_q.q2, kWeightFloor)));
  w.barriers = barriers;
  return w;
}

void ScenarioConfig::validate() const {
  require(std::isfinite(body.mu) && body.mu > 0.0, "mu must be positive");
  require(x0.valid(), "initial elements invalid (need a > 0, 0 <= e < 1, 0 <= i <= pi)");
  require(std::isfinite(theta0), "initial theta must be finite");
  require(x_des.valid(), "target elements invalid (need a > 0, 0 <= e < 1, 0 <= i <= pi)");
  require((p_diag.array() > 0.0).all() && p_diag.allFinite(), "weights p must be positive");
  require(!q1 || *q1 > 0.0, "q1 must be positive");
  require(!q2 || *q2 > 0.0, "q2 must be positive");
  require(reset_period >= 0.0, "reset_period_h must be >= 0");
  require(std::isfinite(constraints.r_min) && constraints.r_min > 0.0, "r_min must be positive");
  require(std::isfinite(constraints.e_min) && constraints.e_min >= 0.0, "e_min must be >= 0");
  require(std::isfinite(constraints.u_max) && constraints.u_max > 0.0, "u_max must be positive");
  require(std::isfinite(constraints.eps1) && constraints.eps1 > 0.0, "eps1 must be positive");
  require(std::isfinite(constraints.eps2) && constraints.eps2 > 0.0, "eps2 must be positive");
  if (const auto* box = std::get_if<InfNormBox>(&saturation)) {
    require((box->bounds.array() > 0.0).all(), "saturation bounds must be positive");
  }
  if (const auto* ball = std::get_if<TwoNormBall>(&saturation)) {
    require(ball->u_max > 0.0, "saturation u_max must be positive");
  }
  if (governor) {
    require(governor->t_hor > 0.0, "governor t_hor_h must be positive");
    require(governor->update_period > 0.0, "governor update_period_h must be positive");
    require(governor->bisection_iters >= 1, "governor bisection_iters must be >= 1");
    require(governor->delta > 0.0, "governor delta must be positive");
  }
  require(std::isfinite(t_final) && t_final > 0.0, "t_final_h must be positive");
  require(std::isfinite(log_period) && log_period > 0.0, "log_period_s must be positive");
  require(integrator.rtol > 0.0 && integrator.atol > 0.0, "integrator tolerances must be positive");
  require(instantaneously_feasible(x0, constraints),
          "initial state is not instantaneously feasible (periapsis or eccentricity bound)");
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& err) {
    throw ParseError(name + ":" + std::to_string(err.line()) + ": " + err.message());
  }

  for (const auto& [section, body] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty()) throw ParseError(name + ": key '" + section + "' outside any section");
      throw ParseError(name + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ParseError(name + ": unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
  auto section = [&](const std::string& s) {
    auto child = tree.get_child_optional(s);
    return Section(s, child ? &*child : nullptr);
  };

  ScenarioConfig cfg;
  cfg.name = name;

  const Section body = section("body");
  cfg.body.mu = body.number("mu", kEarthMu);

  const Section initial = section("initial");
  if (!initial.present()) throw ParseError(name + ": missing section [initial]");
  cfg.x0 = {initial.required_number("a"), initial.required_number("e"),
            initial.required_number("i"), initial.required_number("raan"),
            initial.required_number("argp")};
  cfg.theta0 = initial.number("theta", 0.0);

  const Section target = section("target");
  if (!target.present()) throw ParseError(name + ": missing section [target]");
  cfg.x_des = {target.required_number("a"), target.required_number("e"),
               target.required_number("i"), target.required_number("raan"),
               target.required_number("argp")};

  const Section weights = section("weights");
  if (weights.raw("p")) {
    const auto p = weights.list("p");
    if (p.size() != 5) throw ParseError("[weights] p: expected 5 values");
    cfg.p_diag = Vec5(p[0], p[1], p[2], p[3], p[4]);
  }
  cfg.q1 = weights.number_or_auto("q1");
  cfg.q2 = weights.number_or_auto("q2");
  cfg.barriers = weights.flag("barriers", true);
  cfg.reset_period = weights.number("reset_period_h", 0.1) * 3600.0;

  const Section cons = section("constraints");
  cfg.constraints.r_min = cons.number("r_min", cfg.constraints.r_min);
  cfg.constraints.e_min = cons.number("e_min", cfg.constraints.e_min);
  cfg.constraints.u_max = cons.number("u_max", cfg.constraints.u_max);
  cfg.constraints.eps1 = cons.number("eps1", cfg.constraints.eps1);
  cfg.constraints.eps2 = cons.number("eps2", cfg.constraints.eps2);

  const Section sat = section("saturation");
  const std::string mode = boost::algorithm::to_lower_copy(sat.raw("mode").value_or("two_norm"));
  Vec3 bounds = Vec3::Constant(cfg.constraints.u_max);
  if (sat.raw("bounds")) {
    const auto b = sat.list("bounds");
    if (b.size() != 3) throw ParseError("[saturation] bounds: expected 3 values");
    bounds = Vec3(b[0], b[1], b[2]);
  }
  if (mode == "two_norm") {
    cfg.saturation = TwoNormBall{cfg.constraints.u_max};
  } else if (mode == "inf_norm") {
    cfg.saturation = InfNormBox{bounds};
  } else if (mode == "projection_ball") {
    cfg.saturation = ball_projection(cfg.constraints.u_max);
  } else if (mode == "projection_box") {
    cfg.saturation = box_projection(bounds);
  } else {
    throw ParseError("[saturation] mode: unknown mode '" + mode +
                     "' (two_norm, inf_norm, projection_ball, projection_box)");
  }

  const Section gov = section("governor");
  if (gov.present() && gov.flag("enabled", true)) {
    GovernorConfig g;
    g.t_hor = gov.number("t_hor_h", g.t_hor / 3600.0) * 3600.0;
    g.update_period = gov.number("update_period_h", g.update_period / 3600.0) * 3600.0;
    const double iters = gov.number("bisection_iters", g.bisection_iters);
    if (iters != std::floor(iters)) throw ParseError("[governor] bisection_iters: expected an integer");
    g.bisection_iters = static_cast<int>(iters);
    g.delta = gov.number("delta", g.delta);
    g.delta_rejection = gov.flag("delta_rejection", g.delta_rejection);
    g.verify_fallback = gov.flag("verify_fallback", g.verify_fallback);
    cfg.governor = g;
  }

  const Section integ = section("integration");
  cfg.t_final = integ.number("t_final_h", 40.0) * 3600.0;
  cfg.log_period = integ.number("log_period_s", cfg.log_period);
  cfg.integrator.rtol = integ.number("rtol", cfg.integrator.rtol);
  cfg.integrator.atol = integ.number("atol", cfg.integrator.atol);
  cfg.integrator.max_step = integ.number("max_step_s", cfg.integrator.max_step);
  const std::string method =
      boost::algorithm::to_lower_copy(integ.raw("method").value_or("rosenbrock4"));
  if (method == "rosenbrock4") {
    cfg.integrator.method = IntegratorMethod::Rosenbrock4;
  } else if (method == "dopri5") {
    cfg.integrator.method = IntegratorMethod::DormandPrince45;
  } else {
    throw ParseError("[integration] method: unknown method '" + method + "' (rosenbrock4, dopri5)");
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ScenarioConfig cfg = parse_scenario(buffer.str(), path.string());
  cfg.name = path.stem().string();
  return cfg;
}

std::filesystem::path scenario_directory() {
#ifdef GVC_SCENARIO_DIR
  return GVC_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  const std::filesystem::path direct(name_or_path);
  if (std::filesystem::exists(direct)) return direct;
  for (const auto& candidate : {scenario_directory() / name_or_path,
                                scenario_directory() / (name_or_path + ".ini")}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return direct;
}

} // namespace gvc
