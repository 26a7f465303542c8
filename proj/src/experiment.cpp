#include "cics/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cics/certifier.hpp"
#include "cics/error.hpp"
#include "cics/expression.hpp"

namespace cics {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::config, (path.empty() ? std::string("config") : path) + ": " + what);
}

void expect_object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) config_error(path, "unknown key '" + key + "'");
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double read_double(const Json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "expected a finite number");
  return v;
}

double read_positive(const Json& j, const std::string& path) {
  const double v = read_double(j, path);
  if (!(v > 0.0)) config_error(path, "must be positive");
  return v;
}

int read_int(const Json& j, const std::string& path, int min_value) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < min_value || v > 1'000'000'000) config_error(path, "out of range");
  return static_cast<int>(v);
}

std::string read_string(const Json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

/// A number is accepted as a one-component vector.
Vector read_vector(const Json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, read_double(j, path));
  if (!j.is_array() || j.empty()) config_error(path, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = read_double(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<double> read_doubles(const Json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_double(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> read_strings(const Json& j, const std::string& path) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array() || j.empty()) config_error(path, "expected a string or non-empty array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json vec_json(const Vector& v) { return vector_json(v); }

Json doubles_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

// ---- regions, sets, inputs ----------------------------------------------

RegionConfig read_region(const Json& j, const std::string& path) {
  expect_object(j, path, {"whole", "box", "ball", "union"});
  if (j.size() != 1) config_error(path, "expected exactly one of whole, box, ball, union");
  RegionConfig r;
  if (j.contains("whole")) {
    if (!j["whole"].is_boolean() || !j["whole"].get<bool>()) config_error(join(path, "whole"), "expected true");
    r.kind = RegionConfig::Kind::whole;
  } else if (j.contains("box")) {
    const std::string p = join(path, "box");
    expect_object(j["box"], p, {"lo", "hi"});
    if (!j["box"].contains("lo") || !j["box"].contains("hi")) config_error(p, "needs lo and hi");
    r.kind = RegionConfig::Kind::box;
    r.lo = read_vector(j["box"]["lo"], join(p, "lo"));
    r.hi = read_vector(j["box"]["hi"], join(p, "hi"));
  } else if (j.contains("ball")) {
    const std::string p = join(path, "ball");
    expect_object(j["ball"], p, {"center", "radius"});
    if (!j["ball"].contains("center") || !j["ball"].contains("radius")) config_error(p, "needs center and radius");
    r.kind = RegionConfig::Kind::ball;
    r.center = read_vector(j["ball"]["center"], join(p, "center"));
    r.radius = read_positive(j["ball"]["radius"], join(p, "radius"));
  } else {
    const std::string p = join(path, "union");
    if (!j["union"].is_array() || j["union"].empty()) config_error(p, "expected a non-empty array");
    r.kind = RegionConfig::Kind::set_union;
    for (std::size_t i = 0; i < j["union"].size(); ++i)
      r.parts.push_back(read_region(j["union"][i], p + "[" + std::to_string(i) + "]"));
  }
  return r;
}

Json region_json(const RegionConfig& r) {
  switch (r.kind) {
    case RegionConfig::Kind::whole: return {{"whole", true}};
    case RegionConfig::Kind::box: return {{"box", {{"hi", vec_json(r.hi)}, {"lo", vec_json(r.lo)}}}};
    case RegionConfig::Kind::ball: return {{"ball", {{"center", vec_json(r.center)}, {"radius", r.radius}}}};
    case RegionConfig::Kind::set_union: {
      Json parts = Json::array();
      for (const auto& p : r.parts) parts.push_back(region_json(p));
      return {{"union", parts}};
    }
  }
  return nullptr;
}

Region build_region(const RegionConfig& r, int dim, bool open) {
  switch (r.kind) {
    case RegionConfig::Kind::whole: return Region::whole(dim, open);
    case RegionConfig::Kind::box: return Region::box(r.lo, r.hi, open);
    case RegionConfig::Kind::ball: return Region::ball(r.center, r.radius, open);
    case RegionConfig::Kind::set_union: {
      std::vector<Region> parts;
      for (const auto& p : r.parts) parts.push_back(build_region(p, dim, open));
      return Region::set_union(std::move(parts));
    }
  }
  return Region::whole(dim, open);
}

SetConfig read_set(const Json& j, const std::string& path) {
  expect_object(j, path, {"box", "ball", "points"});
  if (j.size() != 1) config_error(path, "expected exactly one of box, ball, points");
  SetConfig s;
  if (j.contains("box")) {
    const std::string p = join(path, "box");
    expect_object(j["box"], p, {"lo", "hi"});
    if (!j["box"].contains("lo") || !j["box"].contains("hi")) config_error(p, "needs lo and hi");
    s.kind = SetConfig::Kind::box;
    s.lo = read_vector(j["box"]["lo"], join(p, "lo"));
    s.hi = read_vector(j["box"]["hi"], join(p, "hi"));
  } else if (j.contains("ball")) {
    const std::string p = join(path, "ball");
    expect_object(j["ball"], p, {"center", "radius"});
    if (!j["ball"].contains("center") || !j["ball"].contains("radius")) config_error(p, "needs center and radius");
    s.kind = SetConfig::Kind::ball;
    s.center = read_vector(j["ball"]["center"], join(p, "center"));
    s.radius = read_double(j["ball"]["radius"], join(p, "radius"));
    if (s.radius < 0.0) config_error(join(p, "radius"), "must be nonnegative");
  } else {
    const std::string p = join(path, "points");
    if (!j["points"].is_array() || j["points"].empty()) config_error(p, "expected a non-empty array");
    s.kind = SetConfig::Kind::points;
    for (std::size_t i = 0; i < j["points"].size(); ++i)
      s.points.push_back(read_vector(j["points"][i], p + "[" + std::to_string(i) + "]"));
  }
  return s;
}

Json set_json(const SetConfig& s) {
  switch (s.kind) {
    case SetConfig::Kind::box: return {{"box", {{"hi", vec_json(s.hi)}, {"lo", vec_json(s.lo)}}}};
    case SetConfig::Kind::ball: return {{"ball", {{"center", vec_json(s.center)}, {"radius", s.radius}}}};
    case SetConfig::Kind::points: {
      Json pts = Json::array();
      for (const auto& p : s.points) pts.push_back(vec_json(p));
      return {{"points", pts}};
    }
  }
  return nullptr;
}

CompactSet build_set(const SetConfig& s, const SampleBudget& budget) {
  switch (s.kind) {
    case SetConfig::Kind::box: return CompactSet::box(s.lo, s.hi, budget);
    case SetConfig::Kind::ball: return CompactSet::ball(s.center, s.radius, budget);
    case SetConfig::Kind::points: return CompactSet::cloud(s.points, budget);
  }
  return CompactSet::cloud(s.points, budget);
}

InputConfig read_input(const Json& j, const std::string& path) {
  expect_object(j, path, {"constant", "piecewise", "exp_decay", "expression"});
  if (j.size() != 1) config_error(path, "expected exactly one of constant, piecewise, exp_decay, expression");
  InputConfig in;
  if (j.contains("constant")) {
    in.kind = InputConfig::Kind::constant;
    in.value = read_vector(j["constant"], join(path, "constant"));
  } else if (j.contains("piecewise")) {
    const std::string p = join(path, "piecewise");
    expect_object(j["piecewise"], p, {"breakpoints", "values"});
    if (!j["piecewise"].contains("breakpoints") || !j["piecewise"].contains("values"))
      config_error(p, "needs breakpoints and values");
    in.kind = InputConfig::Kind::piecewise;
    in.breakpoints = read_doubles(j["piecewise"]["breakpoints"], join(p, "breakpoints"));
    const Json& vals = j["piecewise"]["values"];
    if (!vals.is_array()) config_error(join(p, "values"), "expected an array");
    for (std::size_t i = 0; i < vals.size(); ++i)
      in.values.push_back(read_vector(vals[i], join(p, "values") + "[" + std::to_string(i) + "]"));
  } else if (j.contains("exp_decay")) {
    const std::string p = join(path, "exp_decay");
    expect_object(j["exp_decay"], p, {"offset", "amplitude", "rate"});
    if (!j["exp_decay"].contains("offset") || !j["exp_decay"].contains("amplitude") ||
        !j["exp_decay"].contains("rate"))
      config_error(p, "needs offset, amplitude and rate");
    in.kind = InputConfig::Kind::exp_decay;
    in.offset = read_vector(j["exp_decay"]["offset"], join(p, "offset"));
    in.amplitude = read_vector(j["exp_decay"]["amplitude"], join(p, "amplitude"));
    in.rate = read_positive(j["exp_decay"]["rate"], join(p, "rate"));
  } else {
    in.kind = InputConfig::Kind::expression;
    in.expressions = read_strings(j["expression"], join(path, "expression"));
  }
  return in;
}

Json input_json(const InputConfig& in) {
  switch (in.kind) {
    case InputConfig::Kind::constant: return {{"constant", vec_json(in.value)}};
    case InputConfig::Kind::piecewise: {
      Json vals = Json::array();
      for (const auto& v : in.values) vals.push_back(vec_json(v));
      return {{"piecewise", {{"breakpoints", doubles_json(in.breakpoints)}, {"values", vals}}}};
    }
    case InputConfig::Kind::exp_decay:
      return {{"exp_decay", {{"amplitude", vec_json(in.amplitude)}, {"offset", vec_json(in.offset)}, {"rate", in.rate}}}};
    case InputConfig::Kind::expression: return {{"expression", in.expressions}};
  }
  return nullptr;
}

InputSignal build_input(const InputConfig& in, const SystemDef& sys) {
  auto check_dim = [&](const Vector& v, const char* what) {
    require(v.size() == sys.input_dim(), ErrorCode::config, std::string("input ") + what + " has wrong dimension");
  };
  switch (in.kind) {
    case InputConfig::Kind::constant:
      check_dim(in.value, "value");
      return InputSignal::constant(in.value);
    case InputConfig::Kind::piecewise:
      for (const auto& v : in.values) check_dim(v, "value");
      return InputSignal::piecewise_constant(in.breakpoints, in.values);
    case InputConfig::Kind::exp_decay:
      check_dim(in.offset, "offset");
      check_dim(in.amplitude, "amplitude");
      return InputSignal::exponential_decay(in.offset, in.amplitude, in.rate);
    case InputConfig::Kind::expression: {
      require(static_cast<int>(in.expressions.size()) == sys.input_dim(), ErrorCode::config,
              "input expression count must equal the input dimension");
      const Expression::Variables vars{{"t", 0}};
      std::vector<Expression> e;
      std::string desc;
      for (const auto& s : in.expressions) {
        e.push_back(Expression::parse(s, vars, true));
        desc += (desc.empty() ? "" : ", ") + s;
      }
      return InputSignal::closed_form(
          sys.input_dim(),
          [e](double t) {
            Vector v(static_cast<Eigen::Index>(e.size()));
            for (std::size_t i = 0; i < e.size(); ++i) v[static_cast<Eigen::Index>(i)] = e[i].evaluate({t});
            return v;
          },
          desc);
    }
  }
  return InputSignal::constant(sys.u_bar());
}

// ---- estimator / tolerance sections ----------------------------------------

void read_estimator(const Json& j, const std::string& path, EstimatorConfig& e) {
  expect_object(j, path,
                {"boundary_samples", "interior_samples", "input_trials", "bisection_iterations", "delta_min",
                 "delta_max", "safety", "horizon", "t_grid", "t_safety", "induction_periods", "validation_trials",
                 "max_switches", "comparison_points", "tube_points", "validation_attempts"});
  auto has = [&](const char* k) { return j.contains(k); };
  auto p = [&](const char* k) { return join(path, k); };
  if (has("boundary_samples")) e.states.boundary = read_int(j["boundary_samples"], p("boundary_samples"), 0);
  if (has("interior_samples")) e.states.interior = read_int(j["interior_samples"], p("interior_samples"), 0);
  if (has("input_trials")) e.input_trials = read_int(j["input_trials"], p("input_trials"), 0);
  if (has("bisection_iterations"))
    e.bisection_iterations = read_int(j["bisection_iterations"], p("bisection_iterations"), 1);
  if (has("delta_min")) e.delta_min = read_positive(j["delta_min"], p("delta_min"));
  if (has("delta_max")) {
    if (j["delta_max"].is_null()) e.delta_max.reset();
    else e.delta_max = read_positive(j["delta_max"], p("delta_max"));
  }
  if (has("safety")) {
    e.safety = read_positive(j["safety"], p("safety"));
    if (e.safety >= 1.0) config_error(p("safety"), "must be below 1");
  }
  if (has("horizon")) e.horizon = read_positive(j["horizon"], p("horizon"));
  if (has("t_grid")) e.t_grid = read_positive(j["t_grid"], p("t_grid"));
  if (has("t_safety")) {
    e.t_safety = read_positive(j["t_safety"], p("t_safety"));
    if (e.t_safety < 1.0) config_error(p("t_safety"), "must be at least 1");
  }
  if (has("induction_periods")) e.induction_periods = read_int(j["induction_periods"], p("induction_periods"), 1);
  if (has("validation_trials")) e.validation_trials = read_int(j["validation_trials"], p("validation_trials"), 1);
  if (has("max_switches")) e.max_switches = read_int(j["max_switches"], p("max_switches"), 1);
  if (has("comparison_points")) e.comparison_points = read_int(j["comparison_points"], p("comparison_points"), 2);
  if (has("tube_points")) e.tube_points = read_int(j["tube_points"], p("tube_points"), 2);
  if (has("validation_attempts"))
    e.validation_attempts = read_int(j["validation_attempts"], p("validation_attempts"), 1);
}

Json estimator_json(const EstimatorConfig& e) {
  return {{"bisection_iterations", e.bisection_iterations},
          {"boundary_samples", e.states.boundary},
          {"comparison_points", e.comparison_points},
          {"delta_max", e.delta_max ? Json(*e.delta_max) : Json(nullptr)},
          {"delta_min", e.delta_min},
          {"horizon", e.horizon},
          {"induction_periods", e.induction_periods},
          {"input_trials", e.input_trials},
          {"interior_samples", e.states.interior},
          {"max_switches", e.max_switches},
          {"safety", e.safety},
          {"t_grid", e.t_grid},
          {"t_safety", e.t_safety},
          {"tube_points", e.tube_points},
          {"validation_attempts", e.validation_attempts},
          {"validation_trials", e.validation_trials}};
}

void read_tolerances(const Json& j, const std::string& path, Tolerances& t) {
  expect_object(j, path, {"rel", "abs", "max_step", "blowup_cap", "exit_resolution", "memory_cap"});
  auto p = [&](const char* k) { return join(path, k); };
  if (j.contains("rel")) t.rel = read_positive(j["rel"], p("rel"));
  if (j.contains("abs")) t.abs = read_positive(j["abs"], p("abs"));
  if (j.contains("max_step")) {
    if (j["max_step"].is_null()) t.max_step = std::numeric_limits<double>::infinity();
    else t.max_step = read_positive(j["max_step"], p("max_step"));
  }
  if (j.contains("blowup_cap")) t.blowup_cap = read_positive(j["blowup_cap"], p("blowup_cap"));
  if (j.contains("exit_resolution")) t.exit_resolution = read_positive(j["exit_resolution"], p("exit_resolution"));
  if (j.contains("memory_cap"))
    t.memory_cap = static_cast<std::size_t>(read_int(j["memory_cap"], p("memory_cap"), 4));
}

Json tolerances_json(const Tolerances& t) {
  return {{"abs", t.abs},
          {"blowup_cap", t.blowup_cap},
          {"exit_resolution", t.exit_resolution},
          {"max_step", std::isfinite(t.max_step) ? Json(t.max_step) : Json(nullptr)},
          {"memory_cap", t.memory_cap},
          {"rel", t.rel}};
}

// ---- execution ------------------------------------------------------------

struct ResolvedSystem {
  SystemDef sys;
};

SystemDef resolve_system(const ExperimentConfig& cfg) {
  if (!cfg.inline_system) return gallery_entry(cfg.system).sys;
  const auto& in = *cfg.inline_system;
  InlineSystem spec;
  spec.name = in.name;
  spec.field = in.field;
  spec.input_dim = in.input_dim;
  const int n = static_cast<int>(in.field.size());
  spec.state_domain = in.state_domain ? build_region(*in.state_domain, n, true) : Region::whole(n, true);
  spec.input_set = in.input_set ? build_region(*in.input_set, in.input_dim, false) : Region::whole(in.input_dim, false);
  if (in.x_bar) spec.x_bar = *in.x_bar;
  if (in.u_bar) spec.u_bar = *in.u_bar;
  return make_inline_system(spec);
}

template <typename T>
const T& need(const std::optional<T>& v, const char* name, const std::string& command) {
  if (!v) fail(ErrorCode::config, "command '" + command + "' requires args." + name);
  return *v;
}

std::string fmt(double v) { return format_double(v); }

std::string certificate_summary(const Certificate& c, int depth = 0) {
  std::ostringstream os;
  const std::string pad(static_cast<std::size_t>(depth * 2), ' ');
  os << pad << to_string(c.kind) << ": value = " << fmt(c.value);
  if (c.time) os << ", time = " << fmt(*c.time);
  if (c.eps) os << " (eps = " << fmt(*c.eps) << ")";
  if (c.capped) os << " [capped at delta_max]";
  os << "; validation " << c.validation.violations << "/" << c.validation.trials << " violations\n";
  for (const auto& sub : c.trace) os << certificate_summary(sub, depth + 1);
  return os.str();
}

std::string verdict_summary(const CicsVerdict& v) {
  std::ostringstream os;
  os << "conclusion: " << to_string(v.conclusion);
  if (v.failed_hypothesis != Hypothesis::none) os << " (" << to_string(v.failed_hypothesis) << ")";
  if (!v.reason.empty()) os << " - " << v.reason;
  os << "\n";
  for (const auto& l : v.levels) {
    os << "  eps = " << fmt(l.eps) << ": " << to_string(l.status) << ", delta = " << fmt(l.delta)
       << ", T0 = " << fmt(l.T0);
    if (l.T1) os << ", T1 = " << fmt(*l.T1);
    if (l.T2) os << ", T2 = " << fmt(*l.T2);
    if (l.T_conv) os << ", T_conv = " << fmt(*l.T_conv) << ", max |x| after = " << fmt(l.max_dist_after);
    os << "\n";
  }
  return os.str();
}

void run_command(const ExperimentConfig& cfg, const SystemDef& sys, ExperimentOutcome& out) {
  const auto& a = cfg.args;
  const std::string& cmd = cfg.command;
  EstimatorConfig est = cfg.estimator;
  est.seed = cfg.seed;
  auto K = [&]() { return build_set(need(a.K, "K", cmd), est.states); };
  auto input = [&]() { return a.input ? build_input(*a.input, sys) : InputSignal::constant(sys.u_bar()); };
  auto xi = [&]() {
    const Vector& v = need(a.xi, "xi", cmd);
    require(v.size() == sys.dim(), ErrorCode::config, "args.xi has wrong dimension");
    return v;
  };
  std::ostringstream summary;
  summary << "command: " << cmd << "\nsystem: " << sys.name() << "\nseed: " << cfg.seed << "\n";

  auto certificate_result = [&](const Certificate& c) {
    out.report["result"] = {{"certificate", to_json(c)}};
    out.csv = certificate_csv(c);
    out.violations_csv = violations_csv(c, sys.dim());
    out.outcome = "success";
    summary << certificate_summary(c);
  };

  if (cmd == "simulate") {
    const double t_end = a.t_end.value_or(10.0);
    require(t_end >= 0.0, ErrorCode::config, "args.t_end must be nonnegative");
    const Vector x0 = xi();
    const InputSignal u = input();
    if (t_end == 0.0) {
      std::ostringstream os;
      os << "t";
      for (int i = 0; i < sys.dim(); ++i) os << ",x_" << i + 1;
      for (int j = 0; j < sys.input_dim(); ++j) os << ",u_" << j + 1;
      os << "\n";
      out.csv = os.str();
      out.report["result"] = {{"trajectory", nullptr}};
      summary << "empty trajectory (t_end = 0)\n";
    } else {
      const Trajectory traj = flow(sys, x0, u, t_end, est.tol);
      out.report["result"] = {{"trajectory", to_json(traj)}};
      out.csv = trajectory_csv(traj, sys.input_dim());
      summary << "status: " << to_string(traj.status()) << ", end time " << fmt(traj.end_time()) << ", final state "
              << vector_json(traj.states().back()).dump() << "\n";
    }
    out.outcome = "success";
  } else if (cmd == "delta1") {
    certificate_result(estimate_delta1(sys, need(a.eps, "eps", cmd), est));
  } else if (cmd == "tau") {
    certificate_result(estimate_tau(sys, K(), need(a.v_radius, "v_radius", cmd), est));
  } else if (cmd == "delta2") {
    certificate_result(estimate_delta2(sys, K(), need(a.T, "T", cmd), need(a.eps, "eps", cmd), est));
  } else if (cmd == "delta3") {
    certificate_result(estimate_delta3(sys, K(), need(a.eps, "eps", cmd), est));
  } else if (cmd == "stability") {
    certificate_result(stability_delta(sys, need(a.eps, "eps", cmd), est));
  } else if (cmd == "uniform-attraction") {
    certificate_result(uniform_attraction(sys, K(), need(a.eps, "eps", cmd), est));
  } else if (cmd == "cics") {
    CicsConfig cc;
    cc.estimator = est;
    cc.horizon = a.horizon.value_or(50.0);
    cc.margin = a.margin.value_or(cc.margin);
    const Vector x0 = xi();
    const auto ladder = a.ladder ? *a.ladder : default_eps_ladder(sys, x0);
    const CicsVerdict v = check_cics(sys, x0, input(), K(), ladder, cc);
    out.report["result"] = {{"verdict", to_json(v)}};
    out.csv = cics_csv(sys, v, 501, cc.norms);
    out.outcome = std::string(to_string(v.conclusion));
    summary << verdict_summary(v);
    switch (v.conclusion) {
      case Conclusion::converges: out.exit_code = kExitOk; break;
      case Conclusion::hypothesis_failed: out.exit_code = kExitHypothesisFailed; break;
      case Conclusion::inconclusive: out.exit_code = kExitInconclusive; break;
      case Conclusion::violated: out.exit_code = kExitViolated; break;
    }
  } else if (cmd == "falsify") {
    FalsifyConfig fc;
    fc.horizon = a.horizon.value_or(fc.horizon);
    const FalsifyResult r = falsify_boundedness(sys, parse_path(need(a.path, "path", cmd)), fc);
    out.report["result"] = {{"falsification", to_json(r)}};
    if (a.K) {
      CicsConfig cc;
      cc.estimator = est;
      cc.estimator.tol = fc.tol;
      cc.horizon = fc.horizon;
      const Vector x0 = r.path.value(0.0);
      const auto ladder = a.ladder ? *a.ladder : default_eps_ladder(sys, x0);
      const CicsVerdict v = check_cics(sys, x0, r.input, K(), ladder, cc);
      out.report["result"]["verdict"] = to_json(v);
      summary << verdict_summary(v);
    }
    out.csv = falsify_csv(r);
    out.outcome = "success";
    summary << "input " << r.input.description() << ", tracking error " << fmt(r.tracking_error) << "\n";
  } else if (cmd == "demo-not-iss") {
    NotIssConfig nc;
    if (a.stability_eps) nc.stability_eps = *a.stability_eps;
    nc.cics.estimator = est;
    nc.cics.horizon = a.horizon.value_or(nc.cics.horizon);
    nc.constant_horizon = a.t_end.value_or(nc.constant_horizon);
    const NotIssReport r = demo_not_iss(sys, nc);
    out.report["result"] = {{"demo", to_json(r)}};
    out.csv = trajectory_csv(r.constant_run, sys.input_dim());
    const bool all = r.stability_holds && r.cics_holds && r.constant_input_stalls;
    out.outcome = all ? "success" : "violated";
    out.exit_code = all ? kExitOk : kExitViolated;
    summary << "(i) stability: " << (r.stability_holds ? "holds" : "fails") << "\n";
    for (const auto& c : r.stability) summary << certificate_summary(c, 1);
    summary << "(ii) cics under decaying input: " << (r.cics_holds ? "holds" : "fails") << "\n"
            << verdict_summary(r.cics) << "(iii) constant input: max |x(t) - xi| = " << fmt(r.max_deviation)
            << (r.constant_input_stalls ? " (state frozen away from x_bar)" : "") << "\n";
  } else {
    fail(ErrorCode::config, "unknown command '" + cmd + "'");
  }
  summary << "outcome: " << out.outcome << " (exit " << out.exit_code << ")\n";
  out.summary = summary.str();
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  expect_object(j, "", {"system", "command", "seed", "args", "estimator", "tolerances", "output"});
  ExperimentConfig c;
  if (!j.contains("system")) config_error("system", "missing");
  if (!j.contains("command")) config_error("command", "missing");
  const Json& sys = j["system"];
  if (sys.is_string()) {
    c.system = sys.get<std::string>();
  } else {
    expect_object(sys, "system", {"inline"});
    if (!sys.contains("inline")) config_error("system", "expected a gallery name or {\"inline\": {...}}");
    const Json& in = sys["inline"];
    expect_object(in, "system.inline", {"name", "field", "input_dim", "state_domain", "input_set", "x_bar", "u_bar"});
    InlineSystemConfig s;
    if (in.contains("name")) s.name = read_string(in["name"], "system.inline.name");
    if (!in.contains("field")) config_error("system.inline.field", "missing");
    s.field = read_strings(in["field"], "system.inline.field");
    if (in.contains("input_dim")) s.input_dim = read_int(in["input_dim"], "system.inline.input_dim", 1);
    if (in.contains("state_domain")) s.state_domain = read_region(in["state_domain"], "system.inline.state_domain");
    if (in.contains("input_set")) s.input_set = read_region(in["input_set"], "system.inline.input_set");
    if (in.contains("x_bar")) s.x_bar = read_vector(in["x_bar"], "system.inline.x_bar");
    if (in.contains("u_bar")) s.u_bar = read_vector(in["u_bar"], "system.inline.u_bar");
    c.system = s.name;
    c.inline_system = std::move(s);
  }
  c.command = read_string(j["command"], "command");
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    config_error("command", "unknown command '" + c.command + "'");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      config_error("seed", "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("args")) {
    const Json& a = j["args"];
    expect_object(a, "args",
                  {"xi", "t_end", "eps", "v_radius", "T", "horizon", "margin", "ladder", "stability_eps", "path",
                   "input", "K"});
    if (a.contains("xi")) c.args.xi = read_vector(a["xi"], "args.xi");
    if (a.contains("t_end")) {
      c.args.t_end = read_double(a["t_end"], "args.t_end");
      if (*c.args.t_end < 0.0) config_error("args.t_end", "must be nonnegative");
    }
    if (a.contains("eps")) c.args.eps = read_positive(a["eps"], "args.eps");
    if (a.contains("v_radius")) c.args.v_radius = read_positive(a["v_radius"], "args.v_radius");
    if (a.contains("T")) {
      c.args.T = read_double(a["T"], "args.T");
      if (*c.args.T < 0.0) config_error("args.T", "must be nonnegative");
    }
    if (a.contains("horizon")) c.args.horizon = read_positive(a["horizon"], "args.horizon");
    if (a.contains("margin")) {
      c.args.margin = read_double(a["margin"], "args.margin");
      if (*c.args.margin < 0.0) config_error("args.margin", "must be nonnegative");
    }
    if (a.contains("ladder")) c.args.ladder = read_doubles(a["ladder"], "args.ladder");
    if (a.contains("stability_eps")) c.args.stability_eps = read_doubles(a["stability_eps"], "args.stability_eps");
    if (a.contains("path")) c.args.path = read_strings(a["path"], "args.path");
    if (a.contains("input")) c.args.input = read_input(a["input"], "args.input");
    if (a.contains("K")) c.args.K = read_set(a["K"], "args.K");
  }
  if (j.contains("estimator")) read_estimator(j["estimator"], "estimator", c.estimator);
  if (j.contains("tolerances")) read_tolerances(j["tolerances"], "tolerances", c.estimator.tol);
  if (j.contains("output")) {
    const Json& o = j["output"];
    expect_object(o, "output", {"dir", "formats"});
    if (o.contains("dir")) c.output.dir = read_string(o["dir"], "output.dir");
    if (o.contains("formats")) {
      c.output.formats = read_strings(o["formats"], "output.formats");
      for (const auto& f : c.output.formats)
        if (f != "json" && f != "csv" && f != "summary") config_error("output.formats", "unknown format '" + f + "'");
      std::sort(c.output.formats.begin(), c.output.formats.end());
      c.output.formats.erase(std::unique(c.output.formats.begin(), c.output.formats.end()), c.output.formats.end());
    }
  }
  c.estimator.seed = c.seed;
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

Json ExperimentConfig::to_json() const {
  Json j;
  if (inline_system) {
    const auto& s = *inline_system;
    Json in = {{"field", s.field}, {"input_dim", s.input_dim}, {"name", s.name}};
    if (s.state_domain) in["state_domain"] = region_json(*s.state_domain);
    if (s.input_set) in["input_set"] = region_json(*s.input_set);
    if (s.x_bar) in["x_bar"] = vec_json(*s.x_bar);
    if (s.u_bar) in["u_bar"] = vec_json(*s.u_bar);
    j["system"] = {{"inline", in}};
  } else {
    j["system"] = system;
  }
  j["command"] = command;
  j["seed"] = seed;
  Json a = Json::object();
  if (args.xi) a["xi"] = vec_json(*args.xi);
  if (args.t_end) a["t_end"] = *args.t_end;
  if (args.eps) a["eps"] = *args.eps;
  if (args.v_radius) a["v_radius"] = *args.v_radius;
  if (args.T) a["T"] = *args.T;
  if (args.horizon) a["horizon"] = *args.horizon;
  if (args.margin) a["margin"] = *args.margin;
  if (args.ladder) a["ladder"] = doubles_json(*args.ladder);
  if (args.stability_eps) a["stability_eps"] = doubles_json(*args.stability_eps);
  if (args.path) a["path"] = *args.path;
  if (args.input) a["input"] = input_json(*args.input);
  if (args.K) a["K"] = set_json(*args.K);
  j["args"] = a;
  j["estimator"] = estimator_json(estimator);
  j["tolerances"] = tolerances_json(estimator.tol);
  j["output"] = {{"dir", output.dir}, {"formats", output.formats}};
  return j;
}

std::string ExperimentConfig::emit() const { return to_json().dump(2) + "\n"; }

std::string ExperimentConfig::system_label() const { return inline_system ? inline_system->name : system; }

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorCode::config, "override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::config, "override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) fail(ErrorCode::config, "override key '" + key + "' descends into a non-object");
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentOutcome execute_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  out.stem = cfg.command + "-" + cfg.system_label() + "-" + std::to_string(cfg.seed);
  out.report = {{"schema_version", kReportSchemaVersion},
                {"command", cfg.command},
                {"system", cfg.system_label()},
                {"seed", cfg.seed},
                {"config", cfg.to_json()}};
  auto record_error = [&](int code, const std::string& kind, const std::string& message) {
    out.exit_code = code;
    out.outcome = "error";
    out.report["result"] = nullptr;
    out.report["error"] = {{"code", kind}, {"message", message}};
    out.summary = "command: " + cfg.command + "\nsystem: " + cfg.system_label() + "\nerror (" + kind + "): " +
                  message + "\noutcome: error (exit " + std::to_string(code) + ")\n";
  };
  try {
    const SystemDef sys = resolve_system(cfg);
    run_command(cfg, sys, out);
    out.report["error"] = nullptr;
  } catch (const Error& e) {
    const int code = e.code() == ErrorCode::config ? kExitConfigError
                     : e.code() == ErrorCode::io   ? kExitIoError
                                                   : kExitEstimatorError;
    record_error(code, std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    record_error(kExitUnexpected, "unexpected", e.what());
  }
  out.report["outcome"] = out.outcome;
  out.report["exit_code"] = out.exit_code;
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) fail(ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io, "cannot move " + tmp.string() + " to " + target.string());
  }
}

std::string emit_plot_data(const ExperimentOutcome& outcome, const std::string& out_dir) {
  const std::string path = (fs::path(out_dir) / (outcome.stem + ".csv")).string();
  write_file_atomic(path, outcome.csv);
  return path;
}

std::vector<std::string> write_outputs(const ExperimentOutcome& outcome, const ExperimentConfig& cfg,
                                       const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) fail(ErrorCode::io, "cannot create output directory " + out_dir);
  std::vector<std::string> written;
  auto wants = [&](const char* f) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), f) != cfg.output.formats.end();
  };
  const fs::path dir(out_dir);
  if (wants("json")) {
    const std::string report = (dir / (outcome.stem + ".json")).string();
    write_file_atomic(report, outcome.report.dump(2) + "\n");
    written.push_back(report);
    const Json meta = {{"schema_version", kReportSchemaVersion},
                       {"report", outcome.stem + ".json"},
                       {"generated_at", timestamp_utc()}};
    const std::string meta_path = (dir / (outcome.stem + ".meta.json")).string();
    write_file_atomic(meta_path, meta.dump(2) + "\n");
    written.push_back(meta_path);
  }
  if (wants("csv") && outcome.outcome != "error") {
    written.push_back(emit_plot_data(outcome, out_dir));
    if (!outcome.violations_csv.empty()) {
      const std::string vpath = (dir / (outcome.stem + "-violations.csv")).string();
      write_file_atomic(vpath, outcome.violations_csv);
      written.push_back(vpath);
    }
  }
  if (wants("summary")) {
    const std::string spath = (dir / (outcome.stem + ".txt")).string();
    write_file_atomic(spath, outcome.summary);
    written.push_back(spath);
  }
  return written;
}

int run_experiment(const ExperimentConfig& cfg, std::vector<std::string>* written) {
  const ExperimentOutcome outcome = execute_experiment(cfg);
  try {
    auto files = write_outputs(outcome, cfg, cfg.output.dir);
    if (written) *written = std::move(files);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) return kExitIoError;
    throw;
  }
  return outcome.exit_code;
}

}  // namespace cics
