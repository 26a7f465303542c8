#include "cics/serialize.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace cics {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_json_num(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json to_json(const Region& r) {
  switch (r.kind()) {
    case Region::Kind::whole: return {{"whole", r.dim()}, {"open", r.is_open()}};
    case Region::Kind::box: return {{"box", {{"lo", vector_json(r.lo())}, {"hi", vector_json(r.hi())}}}, {"open", r.is_open()}};
    case Region::Kind::ball:
      return {{"ball", {{"center", vector_json(r.center())}, {"radius", r.radius()}}}, {"open", r.is_open()}};
    case Region::Kind::set_union: {
      Json parts = Json::array();
      for (const auto& p : r.parts()) parts.push_back(to_json(p));
      return {{"union", parts}};
    }
  }
  return nullptr;
}

Json to_json(const CompactSet& k) {
  Json j;
  switch (k.shape()) {
    case CompactSet::Shape::ball: j["ball"] = {{"center", vector_json(k.center())}, {"radius", k.radius()}}; break;
    case CompactSet::Shape::box: j["box"] = {{"lo", vector_json(k.lo())}, {"hi", vector_json(k.hi())}}; break;
    case CompactSet::Shape::cloud: {
      Json pts = Json::array();
      for (const auto& p : k.points()) pts.push_back(vector_json(p));
      j["points"] = pts;
      break;
    }
  }
  j["sample_budget"] = {{"boundary", k.budget().boundary}, {"interior", k.budget().interior}};
  return j;
}

Json to_json(const Tolerances& tol) {
  return {{"rel", tol.rel},
          {"abs", tol.abs},
          {"max_step", number_json(tol.max_step)},
          {"min_step", tol.min_step},
          {"max_steps", tol.max_steps},
          {"blowup_cap", tol.blowup_cap},
          {"exit_resolution", tol.exit_resolution},
          {"memory_cap", tol.memory_cap}};
}

Json to_json(const Validation& v) {
  Json by = Json::object();
  for (const auto& [k, n] : v.by_condition) by[k] = n;
  return {{"seed", v.seed},          {"trials", v.trials}, {"violations", v.violations},
          {"horizon", number_json(v.horizon)}, {"delta", number_json(v.delta)}, {"by_condition", by}};
}

Json to_json(const Certificate& c) {
  Json inputs = Json::object();
  if (c.eps) inputs["eps"] = *c.eps;
  if (c.horizon_T) inputs["T"] = *c.horizon_T;
  if (c.v_radius) inputs["v_radius"] = *c.v_radius;
  if (c.K) inputs["K"] = to_json(*c.K);
  Json scalars = Json::object();
  for (const auto& [k, v] : c.scalars) scalars[k] = number_json(v);
  Json trace = Json::array();
  for (const auto& sub : c.trace) trace.push_back(to_json(sub));
  Json j = {{"kind", std::string(to_string(c.kind))},
            {"inputs", inputs},
            {"value", number_json(c.value)},
            {"capped", c.capped},
            {"construction_trace", {{"scalars", scalars}, {"certificates", trace}}},
            {"validation", to_json(c.validation)}};
  j["time"] = c.time ? number_json(*c.time) : Json(nullptr);
  return j;
}

Json to_json(const Trajectory& t) {
  return {{"status", std::string(to_string(t.status()))},
          {"sigma_est", number_json(t.sigma_est())},
          {"requested_end", t.requested_end()},
          {"end_time", t.end_time()},
          {"nodes", t.size()},
          {"steps", t.step_count()},
          {"decimated", t.decimated()},
          {"diagnostic", t.diagnostic()},
          {"initial_state", vector_json(t.initial_state())},
          {"final_state", vector_json(t.states().back())},
          {"input", t.input().description()},
          {"tolerances", to_json(t.tolerances())}};
}

Json to_json(const RecurrenceReport& r) {
  Json visits = Json::array();
  for (double t : r.visit_times) visits.push_back(t);
  Json checkpoints = Json::array();
  for (double t : r.checkpoints) checkpoints.push_back(t);
  Json j = {{"K", to_json(r.K)},
            {"horizon", r.horizon},
            {"visit_count", r.visit_times.size()},
            {"visit_times", visits},
            {"checkpoints", checkpoints},
            {"gap_max", r.gap_max},
            {"verdict", r.recurrent ? "recurrent-on-horizon" : "not-recurrent-on-horizon"}};
  j["first_visit"] = r.visit_times.empty() ? Json(nullptr) : Json(r.visit_times.front());
  j["last_visit"] = r.visit_times.empty() ? Json(nullptr) : Json(r.visit_times.back());
  return j;
}

Json to_json(const CicsVerdict& v) {
  Json tail = Json::array();
  for (const auto& row : v.tail_table)
    tail.push_back({{"t", row.t}, {"tail_norm", number_json(row.tail)}, {"horizon_truncated", row.truncated}});
  Json levels = Json::array();
  for (const auto& l : v.levels) {
    Json j = {{"eps", l.eps},
              {"status", std::string(to_string(l.status))},
              {"delta", l.delta},
              {"T0", l.T0},
              {"tail_at_T1", l.tail_at_T1},
              {"max_dist_after", l.max_dist_after},
              {"certificate", to_json(l.attraction)}};
    j["T1"] = l.T1 ? Json(*l.T1) : Json(nullptr);
    j["T2"] = l.T2 ? Json(*l.T2) : Json(nullptr);
    j["T_conv"] = l.T_conv ? Json(*l.T_conv) : Json(nullptr);
    levels.push_back(j);
  }
  const bool domain_ok = v.trajectory.status() == TrajectoryStatus::complete;
  Json j = {{"xi", vector_json(v.xi)},
            {"horizon", v.horizon},
            {"trajectory", to_json(v.trajectory)},
            {"hypothesis_checks",
             {{"state_domain", {{"ok", domain_ok}, {"status", std::string(to_string(v.trajectory.status()))}}},
              {"input_convergence", tail}}},
            {"eps_ladder", levels},
            {"conclusion", std::string(to_string(v.conclusion))},
            {"failed_hypothesis", std::string(to_string(v.failed_hypothesis))},
            {"reason", v.reason}};
  // A failed state-domain check leaves no recurrence report.
  j["hypothesis_checks"]["recurrence"] = domain_ok ? to_json(v.recurrence) : Json(nullptr);
  return j;
}

Json to_json(const FalsifyResult& r) {
  Json ladder = Json::array();
  for (const auto& row : r.tail_ladder)
    ladder.push_back({{"t", row.t}, {"tail_norm", number_json(row.tail)}, {"horizon_truncated", row.truncated}});
  return {{"path", r.path.description},
          {"input", r.input.description()},
          {"tracking_error", r.tracking_error},
          {"tail_ladder", ladder},
          {"trajectory", to_json(r.trajectory)}};
}

Json to_json(const NotIssReport& r) {
  Json stab = Json::array();
  for (const auto& c : r.stability) stab.push_back(to_json(c));
  return {{"stability", {{"holds", r.stability_holds}, {"certificates", stab}}},
          {"cics", {{"holds", r.cics_holds}, {"verdict", to_json(r.cics)}}},
          {"constant_input",
           {{"stalls", r.constant_input_stalls},
            {"max_deviation", r.max_deviation},
            {"trajectory", to_json(r.constant_run)}}}};
}

std::string trajectory_csv(const Trajectory& traj, int input_dim) {
  std::ostringstream os;
  const auto n = traj.initial_state().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i + 1;
  for (int j = 0; j < input_dim; ++j) os << ",u_" << j + 1;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times()[k];
    os << format_double(t);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(traj.states()[k][i]);
    const Vector u = traj.input().evaluate(t);
    for (int j = 0; j < input_dim; ++j) os << ',' << format_double(u[j]);
    os << '\n';
  }
  return os.str();
}

std::string violations_csv(const Certificate& c, int dim) {
  std::ostringstream os;
  os << "certificate,condition,trial,time,observed,bound,input";
  for (int i = 0; i < dim; ++i) os << ",xi_" << i + 1;
  os << '\n';
  std::function<void(const Certificate&, const std::string&)> walk = [&](const Certificate& cert,
                                                                         const std::string& path) {
    for (const auto& r : cert.validation.records) {
      os << path << ',' << csv_field(r.condition) << ',' << r.trial << ',' << format_double(r.time) << ','
         << format_double(r.observed) << ',' << format_double(r.bound) << ',' << csv_field(r.input);
      for (int i = 0; i < dim; ++i) os << ',' << (i < r.xi.size() ? format_double(r.xi[i]) : "");
      os << '\n';
    }
    for (std::size_t i = 0; i < cert.trace.size(); ++i)
      walk(cert.trace[i], path + "/" + std::string(to_string(cert.trace[i].kind)));
  };
  walk(c, std::string(to_string(c.kind)));
  return os.str();
}

std::string certificate_csv(const Certificate& c) {
  std::ostringstream os;
  os << "path,kind,eps,value,time,trials,violations\n";
  std::function<void(const Certificate&, const std::string&)> walk = [&](const Certificate& cert,
                                                                         const std::string& path) {
    os << path << ',' << to_string(cert.kind) << ',' << opt_json_num(cert.eps) << ',' << format_double(cert.value)
       << ',' << opt_json_num(cert.time) << ',' << cert.validation.trials << ',' << cert.validation.violations
       << '\n';
    for (const auto& sub : cert.trace) walk(sub, path + "/" + std::string(to_string(sub.kind)));
  };
  walk(c, std::string(to_string(c.kind)));
  return os.str();
}

std::string cics_csv(const SystemDef& sys, const CicsVerdict& v, int rows, const NormOptions& norms) {
  std::ostringstream os;
  os << "t,dist_x,tail_norm,marker,eps\n";
  const Trajectory& traj = v.trajectory;
  const double end = traj.end_time();
  auto tail = [&](double t) { return input_tail_norm(traj.input(), sys.u_bar(), t, norms).value; };
  auto row = [&](double t, const std::string& marker, const std::string& eps) {
    os << format_double(t) << ',' << format_double(sys.state_dist(traj.eval(t))) << ',' << format_double(tail(t))
       << ',' << marker << ',' << eps << '\n';
  };
  const int n = std::max(rows, 2);
  if (end > 0.0)
    for (int i = 0; i < n; ++i) row(end * i / (n - 1), "", "");
  for (const auto& l : v.levels) {
    const std::string eps = format_double(l.eps);
    if (l.T1 && *l.T1 <= end) row(*l.T1, "T1", eps);
    if (l.T2 && *l.T2 <= end) row(*l.T2, "T2", eps);
    if (l.T_conv && *l.T_conv <= end) row(*l.T_conv, "T_conv", eps);
  }
  return os.str();
}

std::string falsify_csv(const FalsifyResult& r, int rows) {
  std::ostringstream os;
  const auto n = r.trajectory.initial_state().size();
  const auto m = r.input.dim();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",p_" << i + 1;
  for (int j = 0; j < m; ++j) os << ",u_" << j + 1;
  os << '\n';
  const double end = r.trajectory.end_time();
  const int k = std::max(rows, 2);
  for (int i = 0; i < k; ++i) {
    const double t = end * i / (k - 1);
    const Vector x = r.trajectory.eval(t), p = r.path.value(t), u = r.input.evaluate(t);
    os << format_double(t);
    for (Eigen::Index a = 0; a < n; ++a) os << ',' << format_double(x[a]);
    for (Eigen::Index a = 0; a < n; ++a) os << ',' << format_double(p[a]);
    for (int a = 0; a < m; ++a) os << ',' << format_double(u[a]);
    os << '\n';
  }
  return os.str();
}

}  // namespace cics
