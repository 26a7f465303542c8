#include "cics/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "cics/error.hpp"

namespace cics {

namespace {

// Stream identifiers for mix_seed; each purpose draws from its own stream.
constexpr std::uint64_t kStateStream = 11;
constexpr std::uint64_t kInputStream = 23;
constexpr std::uint64_t kValidationStream = 1009;
constexpr std::uint64_t kRefineStream = 37;

constexpr double kStrict = 1.0 - 1e-9;

struct TrialSpec {
  std::size_t state = 0;
  InputSignal input = InputSignal::constant(Vector(0));
};

using Records = std::vector<ViolationRecord>;

std::string describe(const InputSignal& u) {
  std::ostringstream os;
  os.precision(6);
  switch (u.kind()) {
    case InputSignal::Kind::constant:
      os << "constant(" << u.values().front().transpose() << ")";
      break;
    case InputSignal::Kind::piecewise_constant:
      os << "piecewise(" << u.breakpoints().size() << " switches)";
      break;
    case InputSignal::Kind::closed_form:
      os << (u.description().empty() ? "closed-form" : u.description());
      break;
    case InputSignal::Kind::exponential_decay:
      os << "exp-decay(rate " << u.rate() << ")";
      break;
  }
  return os.str();
}

double default_delta_max(const SystemDef& sys, const EstimatorConfig& cfg) {
  if (cfg.delta_max) {
    require(*cfg.delta_max > cfg.delta_min, ErrorCode::precondition, "delta_max must exceed delta_min");
    return *cfg.delta_max;
  }
  const double d = sys.state_domain().boundary_distance(sys.x_bar());
  return std::isfinite(d) ? 0.5 * d : 10.0;
}

Vector random_input_value(const SystemDef& sys, double delta, Rng& rng) {
  const int m = sys.input_dim();
  const Vector& ub = sys.u_bar();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector dir(m);
    for (int i = 0; i < m; ++i) dir[i] = standard_normal(rng);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    const double r = delta * kStrict * std::pow(uniform01(rng), 1.0 / m);
    const Vector v = ub + dir * (r / norm);
    if (sys.input_set().contains(v)) return v;
  }
  // Rejection failed (thin intersection); fall back to a projected draw.
  Vector dir(m);
  for (int i = 0; i < m; ++i) dir[i] = standard_normal(rng);
  const double norm = dir.norm();
  Vector v = norm > 0.0 ? Vector(ub + dir * (delta * kStrict * uniform01(rng) / norm)) : ub;
  v = sys.input_set().project(v);
  return sys.input_dist(v) < delta ? v : ub;
}

InputSignal random_input(const SystemDef& sys, double delta, double span, int max_switches, Rng& rng) {
  const int k = 1 + static_cast<int>(uniform01(rng) * std::max(1, max_switches));
  std::vector<double> times;
  const double width = span > 0.0 ? span : 1.0;
  for (int i = 0; i < k; ++i) times.push_back(uniform01(rng) * width);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (!times.empty() && times.front() <= 0.0) times.erase(times.begin());
  std::vector<Vector> values;
  for (std::size_t i = 0; i <= times.size(); ++i) values.push_back(random_input_value(sys, delta, rng));
  if (times.empty()) return InputSignal::constant(values.front());
  return InputSignal::piecewise_constant(std::move(times), std::move(values));
}

std::vector<InputSignal> extreme_inputs(const SystemDef& sys, double delta) {
  std::vector<InputSignal> out;
  for (int i = 0; i < sys.input_dim(); ++i) {
    for (const double sign : {1.0, -1.0}) {
      Vector v = sys.u_bar();
      v[i] += sign * delta * kStrict;
      if (sys.input_set().contains(v)) out.push_back(InputSignal::constant(v));
    }
  }
  return out;
}

/// Extreme constants against the first `extreme_states` states, then `random`
/// piecewise-constant draws cycling through all states.
std::vector<TrialSpec> plan_trials(const SystemDef& sys, std::size_t nstates, double delta, double span,
                                   std::size_t extreme_states, int random, int max_switches,
                                   std::uint64_t seed) {
  std::vector<TrialSpec> plan;
  if (nstates == 0) return plan;
  const auto extremes = extreme_inputs(sys, delta);
  for (const auto& e : extremes)
    for (std::size_t s = 0; s < std::min(nstates, extreme_states); ++s) plan.push_back({s, e});
  for (int j = 0; j < random; ++j) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(j));
    plan.push_back({static_cast<std::size_t>(j) % nstates, random_input(sys, delta, span, max_switches, rng)});
  }
  return plan;
}

/// Validation plan with exactly `trials` entries, at most half of them extreme.
std::vector<TrialSpec> plan_validation(const SystemDef& sys, std::size_t nstates, double delta, double span,
                                       int trials, int max_switches, std::uint64_t seed) {
  const std::size_t n_ext = extreme_inputs(sys, delta).size();
  std::size_t ext_states = 0;
  if (n_ext > 0) ext_states = std::min(nstates, static_cast<std::size_t>(trials / 2) / n_ext);
  const int random = trials - static_cast<int>(ext_states * n_ext);
  return plan_trials(sys, nstates, delta, span, ext_states, random, max_switches, seed);
}

/// Runs `count` trials. With early_exit, stops at the first violating trial.
Validation run_trials(std::size_t count, const std::function<Records(std::size_t)>& check, bool early_exit) {
  Validation v;
  for (std::size_t i = 0; i < count; ++i) {
    ++v.trials;
    Records recs = check(i);
    if (recs.empty()) continue;
    ++v.violations;
    for (auto& r : recs) {
      r.trial = static_cast<int>(i);
      v.add(std::move(r));
    }
    if (early_exit) break;
  }
  return v;
}

/// Uniform comparison grid on [0, T] merged with the trajectory's own nodes.
std::vector<double> comparison_times(const Trajectory& traj, double T, int points) {
  std::vector<double> ts;
  const int n = std::max(points, 2);
  for (int i = 0; i < n; ++i) ts.push_back(T * i / (n - 1));
  for (double t : traj.times())
    if (t <= T) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

ViolationRecord record(std::string condition, const Vector& xi, const InputSignal* u, double t,
                       double observed, double bound) {
  ViolationRecord r;
  r.condition = std::move(condition);
  r.xi = xi;
  r.input = u ? describe(*u) : "autonomous";
  r.time = t;
  r.observed = observed;
  r.bound = bound;
  return r;
}

std::string existence_note(const Trajectory& traj) {
  return std::string(to_string(traj.status()));
}

struct Bisection {
  double hi = 0.0;  // smallest failing candidate seen (or delta_max when capped)
  bool capped = false;
  int evaluations = 0;
};

/// Geometric bisection for the largest passing delta in [lo, hi]. `lo` must
/// pass (checked by the caller).
Bisection bisect(double lo, double hi, int iterations, const std::function<bool(double)>& pass) {
  Bisection b;
  ++b.evaluations;
  if (pass(hi)) {
    b.hi = hi;
    b.capped = true;
    return b;
  }
  for (int i = 0; i < iterations; ++i) {
    const double mid = std::sqrt(lo * hi);
    ++b.evaluations;
    (pass(mid) ? lo : hi) = mid;
  }
  b.hi = hi;
  return b;
}

double value_for(const Bisection& b, double safety) { return b.capped ? b.hi : safety * b.hi; }

double scan_max_dist(const SystemDef& sys, const Trajectory& traj, double from) {
  double worst = 0.0;
  traj.scan(3, [&](double t, const Vector& x) {
    if (t >= from) worst = std::max(worst, sys.state_dist(x));
  });
  return worst;
}

// ---- Delta1 -------------------------------------------------------------

Records check_delta1(const SystemDef& sys, const Vector& xi, double eps, const EstimatorConfig& cfg) {
  if (!sys.state_domain().contains(xi)) return {record("domain", xi, nullptr, 0.0, sys.state_dist(xi), eps)};
  const Trajectory traj = flow_autonomous(sys, xi, cfg.horizon, cfg.tol);
  if (traj.status() != TrajectoryStatus::complete)
    return {record("existence:" + existence_note(traj), xi, nullptr, traj.end_time(), traj.end_time(), cfg.horizon)};
  Records out;
  bool found = false;
  traj.scan(3, [&](double t, const Vector& x) {
    const double d = sys.state_dist(x);
    if (!found && !(d < eps)) {
      found = true;
      out.push_back(record("bound", xi, nullptr, t, d, eps));
    }
  });
  return out;
}

/// Samples exactly the budgeted number of states when the set allows it: in
/// low dimension the boundary has few distinct points, so the shortfall is
/// moved to the interior.
std::vector<Vector> full_sample(const CompactSet& set, SampleBudget budget, std::uint64_t seed) {
  auto states = set.sample(budget, seed);
  const auto want = static_cast<std::size_t>(budget.boundary + budget.interior);
  if (states.size() < want && set.shape() != CompactSet::Shape::cloud) {
    budget.interior += static_cast<int>(want - states.size());
    states = set.sample(budget, seed);
  }
  return states;
}

Validation validate_delta1(const SystemDef& sys, double eps, double delta, const EstimatorConfig& cfg,
                           const SampleBudget& budget, std::uint64_t seed, bool early_exit) {
  const auto states = full_sample(CompactSet::ball(sys.x_bar(), delta), budget, mix_seed(seed, kStateStream));
  Validation v = run_trials(
      states.size(), [&](std::size_t i) { return check_delta1(sys, states[i], eps, cfg); }, early_exit);
  v.seed = seed;
  v.horizon = cfg.horizon;
  v.delta = delta;
  return v;
}

// ---- Tau ----------------------------------------------------------------

/// Last time on [0, horizon] with |phi(t, xi)| >= v_radius (0 if never).
double last_outside(const SystemDef& sys, const Trajectory& traj, double v_radius) {
  double t_out = -1.0, t_in = 0.0;
  bool pending = false;
  traj.scan(3, [&](double t, const Vector& x) {
    if (sys.state_dist(x) >= v_radius) {
      t_out = t;
      pending = true;
    } else if (pending) {
      t_in = t;
      pending = false;
    }
  });
  if (t_out < 0.0) return 0.0;
  if (pending) fail(ErrorCode::non_attraction, "sample does not remain in V by the horizon");
  double a = t_out, b = t_in;
  for (int i = 0; i < 60 && b - a > 1e-12; ++i) {
    const double mid = 0.5 * (a + b);
    (sys.state_dist(traj.eval(mid)) >= v_radius ? a : b) = mid;
  }
  return a;
}

double grid_ceil(double t, double grid) {
  if (t <= 0.0) return 0.0;
  // Integration error can push an exact grid time marginally past the point.
  return grid * std::ceil(t / grid - 1e-6);
}

// ---- Delta2 / Delta3 ------------------------------------------------------

struct StateBank {
  std::vector<Vector> states;
  std::vector<Trajectory> autos;
};

StateBank make_bank(const SystemDef& sys, const std::vector<Vector>& states, double T, const EstimatorConfig& cfg) {
  StateBank bank;
  bank.states = states;
  for (const auto& xi : states) {
    require(sys.state_domain().contains(xi), ErrorCode::precondition, "K must lie inside the state domain");
    Trajectory traj = flow_autonomous(sys, xi, T, cfg.tol);
    require(traj.status() == TrajectoryStatus::complete, ErrorCode::precondition,
            "autonomous solution from a sample of K does not exist on [0, T]");
    bank.autos.push_back(std::move(traj));
  }
  return bank;
}

/// Shared perturbation check: existence on [0, T] and per-time comparisons.
/// `tube` enables the Delta3 tube/terminal conditions; otherwise the Delta2
/// deviation condition is checked.
Records check_perturbed(const SystemDef& sys, const StateBank& bank, const TrialSpec& trial, double T,
                        double eps, const EstimatorConfig& cfg, const TubeCloud* tube) {
  const Vector& xi = bank.states[trial.state];
  const Trajectory traj = flow(sys, xi, trial.input, T, cfg.tol);
  if (traj.status() != TrajectoryStatus::complete)
    return {record(tube ? "a:existence" : "existence", xi, &trial.input, traj.end_time(), traj.end_time(), T)};
  const Trajectory& autonomous = bank.autos[trial.state];
  Records out;
  for (double t : comparison_times(traj, T, cfg.comparison_points)) {
    const Vector x = traj.eval(t);
    double d = (x - autonomous.eval(t)).norm();
    if (tube && !(d < eps)) d = std::min(d, tube->distance(x));
    if (!(d < eps)) {
      out.push_back(record(tube ? "b:tube" : "deviation", xi, &trial.input, t, d, eps));
      break;
    }
  }
  if (tube) {
    const double terminal = sys.state_dist(traj.eval(T));
    if (!(terminal < eps)) out.push_back(record("c:terminal", xi, &trial.input, T, terminal, eps));
  }
  return out;
}

Validation validate_perturbed(const SystemDef& sys, const StateBank& bank, double T, double eps, double delta,
                              const EstimatorConfig& cfg, int trials, std::uint64_t seed, bool early_exit,
                              const TubeCloud* tube, bool estimation) {
  const auto plan = estimation ? plan_trials(sys, bank.states.size(), delta, T, bank.states.size(),
                                             cfg.input_trials, cfg.max_switches, mix_seed(seed, kInputStream))
                               : plan_validation(sys, bank.states.size(), delta, T, trials, cfg.max_switches,
                                                 mix_seed(seed, kInputStream));
  Validation v = run_trials(
      plan.size(), [&](std::size_t i) { return check_perturbed(sys, bank, plan[i], T, eps, cfg, tube); },
      early_exit);
  v.seed = seed;
  v.horizon = T;
  v.delta = delta;
  return v;
}

Certificate delta2_with_safety(const SystemDef& sys, const CompactSet& K, double T, double eps,
                               const EstimatorConfig& cfg, double safety) {
  require(eps > 0.0, ErrorCode::precondition, "eps must be positive");
  require(T >= 0.0, ErrorCode::precondition, "T must be nonnegative");
  require(K.dim() == sys.dim(), ErrorCode::precondition, "K dimension mismatch");
  Certificate cert;
  cert.kind = CertificateKind::delta2;
  cert.eps = eps;
  cert.horizon_T = T;
  cert.K = K;
  const double dmax = default_delta_max(sys, cfg);
  cert.scalars["delta_max"] = dmax;
  cert.scalars["safety"] = safety;
  if (T == 0.0) {
    // phi(0, xi, u) = phi(0, xi): the deviation condition holds for every delta.
    cert.value = dmax;
    cert.capped = true;
    cert.validation.seed = mix_seed(cfg.seed, kValidationStream);
    cert.validation.delta = dmax;
    return cert;
  }
  const StateBank bank = make_bank(sys, K.sample(cfg.states, mix_seed(cfg.seed, kStateStream)), T, cfg);
  auto pass = [&](double delta) {
    return validate_perturbed(sys, bank, T, eps, delta, cfg, 0, cfg.seed, true, nullptr, true).violations == 0;
  };
  if (!pass(cfg.delta_min))
    fail(ErrorCode::existence_failure, "perturbed solutions violate the deviation bound at delta_min");
  const Bisection b = bisect(cfg.delta_min, dmax, cfg.bisection_iterations, pass);
  cert.capped = b.capped;
  cert.scalars["bracket_hi"] = b.hi;
  cert.scalars["evaluations"] = b.evaluations;

  double s = safety;
  for (int attempt = 0; attempt < cfg.validation_attempts; ++attempt, s *= s) {
    const double value = b.capped && attempt == 0 ? b.hi : s * b.hi;
    const std::uint64_t vseed = mix_seed(cfg.seed, kValidationStream + attempt);
    const StateBank vbank = make_bank(sys, K.sample(cfg.states, mix_seed(vseed, kStateStream)), T, cfg);
    Validation v = validate_perturbed(sys, vbank, T, eps, value, cfg, cfg.validation_trials, vseed, false,
                                      nullptr, false);
    if (v.violations == 0) {
      cert.value = value;
      cert.validation = std::move(v);
      cert.scalars["safety"] = b.capped && attempt == 0 ? 1.0 : s;
      return cert;
    }
  }
  fail(ErrorCode::validation_failure, "delta2 certificate failed revalidation at every safety factor");
}

Certificate delta3_with_safety(const SystemDef& sys, const CompactSet& K, double eps, const EstimatorConfig& cfg,
                               const Certificate& tau, double safety) {
  const double T = tau.value;
  Certificate d2 = delta2_with_safety(sys, K, T, 0.5 * eps, cfg, safety);
  Certificate cert;
  cert.kind = CertificateKind::delta3;
  cert.eps = eps;
  cert.K = K;
  cert.value = d2.value;
  cert.time = T;
  cert.capped = d2.capped;
  cert.scalars["T"] = T;
  cert.scalars["delta2"] = d2.value;
  cert.trace = {tau, std::move(d2)};
  return cert;
}

Validation validate_delta3(const SystemDef& sys, const CompactSet& K, double eps, double T, double delta,
                           const EstimatorConfig& cfg, int trials, std::uint64_t seed) {
  Validation v;
  v.seed = seed;
  v.horizon = T;
  v.delta = delta;
  if (T == 0.0) {
    // Existence and tube membership are immediate; only |xi| < eps remains.
    const auto states = K.sample(cfg.states, mix_seed(seed, kStateStream));
    v = run_trials(
        states.size(),
        [&](std::size_t i) -> Records {
          const double d = sys.state_dist(states[i]);
          if (d < eps) return {};
          return {record("c:terminal", states[i], nullptr, 0.0, d, eps)};
        },
        false);
    v.seed = seed;
    v.delta = delta;
    return v;
  }
  const TubeCloud tube = compute_tube(sys, K, T, cfg);
  const StateBank bank = make_bank(sys, K.sample(cfg.states, mix_seed(seed, kStateStream)), T, cfg);
  return validate_perturbed(sys, bank, T, eps, delta, cfg, trials, seed, false, &tube, false);
}

// ---- Stability ------------------------------------------------------------

struct StabilityCheck {
  double eps = 0.0;
  double horizon = 0.0;
  double period = 0.0;      // T of the proof construction
  int periods = 0;
  double renewal_radius = 0.0;  // radius of K; renewal unchecked when <= 0
};

Records check_stability(const SystemDef& sys, const Vector& xi, const InputSignal& u, const StabilityCheck& sc,
                        const EstimatorConfig& cfg) {
  if (!sys.state_domain().contains(xi)) return {record("domain", xi, &u, 0.0, sys.state_dist(xi), sc.eps)};
  const Trajectory traj = flow(sys, xi, u, sc.horizon, cfg.tol);
  if (traj.status() != TrajectoryStatus::complete)
    return {record("existence:" + existence_note(traj), xi, &u, traj.end_time(), traj.end_time(), sc.horizon)};
  Records out;
  bool found = false;
  traj.scan(3, [&](double t, const Vector& x) {
    const double d = sys.state_dist(x);
    if (!found && !(d < sc.eps)) {
      found = true;
      out.push_back(record("bound", xi, &u, t, d, sc.eps));
    }
  });
  if (sc.renewal_radius > 0.0 && sc.period > 0.0) {
    for (int k = 1; k <= sc.periods && k * sc.period <= sc.horizon; ++k) {
      const double d = sys.state_dist(traj.eval(k * sc.period));
      if (d > sc.renewal_radius) {
        out.push_back(record("renewal", xi, &u, k * sc.period, d, sc.renewal_radius));
        break;
      }
    }
  }
  return out;
}

Validation validate_stability(const SystemDef& sys, double delta, const StabilityCheck& sc,
                              const EstimatorConfig& cfg, int trials, std::uint64_t seed, bool early_exit,
                              bool estimation) {
  const auto states =
      CompactSet::ball(sys.x_bar(), delta * kStrict).sample(cfg.states, mix_seed(seed, kStateStream));
  const auto plan = estimation ? plan_trials(sys, states.size(), delta, sc.horizon, states.size(),
                                             cfg.input_trials, cfg.max_switches, mix_seed(seed, kInputStream))
                               : plan_validation(sys, states.size(), delta, sc.horizon, trials, cfg.max_switches,
                                                 mix_seed(seed, kInputStream));
  Validation v = run_trials(
      plan.size(), [&](std::size_t i) { return check_stability(sys, states[plan[i].state], plan[i].input, sc, cfg); },
      early_exit);
  v.seed = seed;
  v.horizon = sc.horizon;
  v.delta = delta;
  return v;
}

StabilityCheck stability_check_of(const Certificate& cert, double delta) {
  StabilityCheck sc;
  sc.eps = *cert.eps;
  sc.horizon = cert.scalars.at("horizon");
  sc.period = cert.scalars.at("T");
  sc.periods = static_cast<int>(cert.scalars.at("induction_periods"));
  if (delta <= cert.scalars.at("proof_delta")) sc.renewal_radius = cert.scalars.at("K_radius");
  return sc;
}

// ---- Uniform attraction ----------------------------------------------------

Records check_attraction(const SystemDef& sys, const Vector& xi, const InputSignal& u, double eps, double T0,
                         double horizon, const EstimatorConfig& cfg) {
  const Trajectory traj = flow(sys, xi, u, horizon, cfg.tol);
  if (traj.status() != TrajectoryStatus::complete)
    return {record("existence:" + existence_note(traj), xi, &u, traj.end_time(), traj.end_time(), horizon)};
  Records out;
  bool found = false;
  traj.scan(3, [&](double t, const Vector& x) {
    if (found || t < T0) return;
    const double d = sys.state_dist(x);
    if (d > eps) {
      found = true;
      out.push_back(record("attraction", xi, &u, t, d, eps));
    }
  });
  if (!found && T0 <= traj.end_time()) {
    const double d = sys.state_dist(traj.eval(T0));
    if (d > eps) out.push_back(record("attraction", xi, &u, T0, d, eps));
  }
  return out;
}

Validation validate_attraction(const SystemDef& sys, const CompactSet& K, double eps, double T0, double delta,
                               double horizon, const EstimatorConfig& cfg, int trials, std::uint64_t seed) {
  const auto states = K.sample(cfg.states, mix_seed(seed, kStateStream));
  const auto plan =
      plan_validation(sys, states.size(), delta, horizon, trials, cfg.max_switches, mix_seed(seed, kInputStream));
  Validation v = run_trials(
      plan.size(),
      [&](std::size_t i) { return check_attraction(sys, states[plan[i].state], plan[i].input, eps, T0, horizon, cfg); },
      false);
  v.seed = seed;
  v.horizon = horizon;
  v.delta = delta;
  return v;
}

double attraction_horizon(double T0, const EstimatorConfig& cfg) { return std::max(cfg.horizon, 2.0 * T0); }

}  // namespace

std::string_view to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::delta1: return "delta1";
    case CertificateKind::delta2: return "delta2";
    case CertificateKind::tau: return "tau";
    case CertificateKind::delta3: return "delta3";
    case CertificateKind::stability_delta: return "stability-delta";
    case CertificateKind::uniform_attraction: return "uniform-attraction";
  }
  return "unknown";
}

void Validation::add(ViolationRecord rec) {
  ++by_condition[rec.condition];
  if (records.size() < kMaxRecords) records.push_back(std::move(rec));
}

const Certificate* Certificate::find(CertificateKind sub) const {
  for (const auto& c : trace)
    if (c.kind == sub) return &c;
  return nullptr;
}

double TubeCloud::distance(const Vector& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points) best = std::min(best, (x - p).norm());
  return best;
}

std::vector<InputSignal> trial_inputs(const SystemDef& sys, double delta, double span, int random, int max_switches,
                                      std::uint64_t seed) {
  std::vector<InputSignal> out = extreme_inputs(sys, delta);
  for (int j = 0; j < random; ++j) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(j));
    out.push_back(random_input(sys, delta, span, max_switches, rng));
  }
  return out;
}

Certificate estimate_delta1(const SystemDef& sys, double eps, const EstimatorConfig& cfg) {
  require(eps > 0.0, ErrorCode::precondition, "eps must be positive");
  Certificate cert;
  cert.kind = CertificateKind::delta1;
  cert.eps = eps;
  const double dmax = default_delta_max(sys, cfg);
  cert.scalars["delta_max"] = dmax;
  auto pass = [&](double delta) {
    return validate_delta1(sys, eps, delta, cfg, cfg.states, cfg.seed, true).violations == 0;
  };
  if (!pass(cfg.delta_min))
    fail(ErrorCode::no_stability, "trajectories from radius delta_min leave the eps-ball");
  const Bisection b = bisect(cfg.delta_min, dmax, cfg.bisection_iterations, pass);
  cert.capped = b.capped;
  cert.scalars["bracket_hi"] = b.hi;
  cert.scalars["evaluations"] = b.evaluations;

  const SampleBudget vbudget{cfg.validation_trials / 2, cfg.validation_trials - cfg.validation_trials / 2};
  double s = cfg.safety;
  for (int attempt = 0; attempt < cfg.validation_attempts; ++attempt, s *= s) {
    const double value = b.capped && attempt == 0 ? b.hi : s * b.hi;
    Validation v = validate_delta1(sys, eps, value, cfg, vbudget, mix_seed(cfg.seed, kValidationStream + attempt),
                                   false);
    if (v.violations == 0) {
      cert.value = value;
      cert.scalars["safety"] = b.capped && attempt == 0 ? 1.0 : s;
      cert.validation = std::move(v);
      return cert;
    }
  }
  fail(ErrorCode::validation_failure, "delta1 certificate failed revalidation at every safety factor");
}

Certificate estimate_tau(const SystemDef& sys, const CompactSet& K, double v_radius, const EstimatorConfig& cfg) {
  require(v_radius > 0.0, ErrorCode::precondition, "V radius must be positive");
  require(K.dim() == sys.dim(), ErrorCode::precondition, "K dimension mismatch");
  Certificate cert;
  cert.kind = CertificateKind::tau;
  cert.v_radius = v_radius;
  cert.K = K;
  const auto states = K.sample(cfg.states, mix_seed(cfg.seed, kStateStream));
  double worst = 0.0;
  for (const auto& xi : states) {
    require(sys.state_domain().contains(xi), ErrorCode::precondition, "K must lie inside the state domain");
    const Trajectory traj = flow_autonomous(sys, xi, cfg.horizon, cfg.tol);
    if (traj.status() != TrajectoryStatus::complete)
      fail(ErrorCode::non_attraction, "autonomous solution from a sample of K ends with status " +
                                          std::string(to_string(traj.status())));
    worst = std::max(worst, last_outside(sys, traj, v_radius));
  }
  const double raw = grid_ceil(worst, cfg.t_grid);
  cert.value = cfg.t_safety * raw;
  cert.scalars["T_raw"] = raw;
  cert.scalars["last_exit"] = worst;
  cert.validation = validate_certificate(sys, cert, cfg, mix_seed(cfg.seed, kValidationStream),
                                         cfg.states.boundary + cfg.states.interior);
  if (cert.validation.violations != 0)
    fail(ErrorCode::validation_failure, "fresh samples of K leave V after the estimated time");
  return cert;
}

Certificate estimate_delta2(const SystemDef& sys, const CompactSet& K, double T, double eps,
                            const EstimatorConfig& cfg) {
  return delta2_with_safety(sys, K, T, eps, cfg, cfg.safety);
}

TubeCloud compute_tube(const SystemDef& sys, const CompactSet& K, double T, const EstimatorConfig& cfg) {
  require(T >= 0.0, ErrorCode::precondition, "T must be nonnegative");
  TubeCloud tube;
  tube.K = K;
  tube.T = T;
  const auto states = K.sample(cfg.states, mix_seed(cfg.seed, kStateStream));
  const int n = std::max(cfg.tube_points, 2);
  for (const auto& xi : states) {
    if (T == 0.0) {
      tube.points.push_back(xi);
      continue;
    }
    const Trajectory traj = flow_autonomous(sys, xi, T, cfg.tol);
    require(traj.status() == TrajectoryStatus::complete, ErrorCode::precondition,
            "autonomous solution from a sample of K does not exist on [0, T]");
    for (int i = 0; i < n; ++i) tube.points.push_back(traj.eval(T * i / (n - 1)));
  }
  return tube;
}

Certificate estimate_delta3(const SystemDef& sys, const CompactSet& K, double eps, const EstimatorConfig& cfg) {
  require(eps > 0.0, ErrorCode::precondition, "eps must be positive");
  const Certificate tau = estimate_tau(sys, K, 0.5 * eps, cfg);
  double s = cfg.safety;
  for (int attempt = 0; attempt < cfg.validation_attempts; ++attempt, s *= s) {
    Certificate cert = delta3_with_safety(sys, K, eps, cfg, tau, s);
    cert.validation = validate_delta3(sys, K, eps, tau.value, cert.value, cfg, cfg.validation_trials,
                                      mix_seed(cfg.seed, kValidationStream + 100 + attempt));
    if (cert.validation.violations == 0) return cert;
  }
  fail(ErrorCode::validation_failure, "delta3 conclusions violated at every safety factor");
}

Certificate stability_delta(const SystemDef& sys, double eps, const EstimatorConfig& cfg) {
  require(eps > 0.0, ErrorCode::precondition, "eps must be positive");
  Certificate d1 = estimate_delta1(sys, 0.5 * eps, cfg);
  const double delta1 = std::min(d1.value, eps);
  const double k_radius = 0.5 * delta1;
  const CompactSet K = CompactSet::ball(sys.x_bar(), k_radius, cfg.states);
  Certificate d3 = estimate_delta3(sys, K, k_radius, cfg);
  const double T = *d3.time;
  const double proof_delta = std::min(d3.value, k_radius);

  Certificate cert;
  cert.kind = CertificateKind::stability_delta;
  cert.eps = eps;
  cert.scalars["delta1"] = delta1;
  cert.scalars["K_radius"] = k_radius;
  cert.scalars["T"] = T;
  cert.scalars["delta3"] = d3.value;
  cert.scalars["proof_delta"] = proof_delta;
  cert.scalars["induction_periods"] = cfg.induction_periods;
  const double horizon = std::max(cfg.induction_periods * T, cfg.horizon);
  cert.scalars["horizon"] = horizon;
  cert.trace = {std::move(d1), std::move(d3)};

  // The proof's delta is conservative; search upward on the conclusion itself.
  StabilityCheck plain;
  plain.eps = eps;
  plain.horizon = horizon;
  auto pass = [&](double delta) {
    return validate_stability(sys, delta, plain, cfg, 0, mix_seed(cfg.seed, kRefineStream), true, true).violations ==
           0;
  };
  const double dmax = std::max(default_delta_max(sys, cfg), proof_delta);
  double refined = proof_delta;
  if (dmax > proof_delta && pass(proof_delta)) {
    const Bisection b = bisect(proof_delta, dmax, cfg.bisection_iterations, pass);
    cert.scalars["bracket_hi"] = b.hi;
    cert.capped = b.capped;
    refined = std::max(proof_delta, value_for(b, cfg.safety));
  }
  cert.scalars["refined_delta"] = refined;

  double candidate = refined;
  for (int attempt = 0; attempt <= cfg.validation_attempts; ++attempt) {
    cert.value = std::max(candidate, proof_delta);
    cert.validation = validate_stability(sys, cert.value, stability_check_of(cert, cert.value), cfg,
                                         cfg.validation_trials, mix_seed(cfg.seed, kValidationStream + 200 + attempt),
                                         false, false);
    if (cert.validation.violations == 0) return cert;
    if (cert.value <= proof_delta) break;
    candidate = proof_delta + (candidate - proof_delta) * cfg.safety * cfg.safety;
    if (attempt + 1 == cfg.validation_attempts) candidate = proof_delta;
    cert.capped = false;
  }
  if (cert.validation.by_condition.count("renewal"))
    fail(ErrorCode::renewal_failure, "period-boundary state left K; the induction does not hold");
  fail(ErrorCode::validation_failure, "stability certificate violated at the proof-level delta");
}

Certificate uniform_attraction(const SystemDef& sys, const CompactSet& K, double eps, const EstimatorConfig& cfg) {
  require(eps > 0.0, ErrorCode::precondition, "eps must be positive");
  Certificate stab = stability_delta(sys, eps, cfg);
  const double delta1 = stab.value;
  const Certificate tau = estimate_tau(sys, K, 0.5 * delta1, cfg);
  double s = cfg.safety;
  for (int attempt = 0; attempt < cfg.validation_attempts; ++attempt, s *= s) {
    Certificate d3 = delta3_with_safety(sys, K, delta1, cfg, tau, s);
    d3.validation = validate_delta3(sys, K, delta1, tau.value, d3.value, cfg, cfg.validation_trials,
                                    mix_seed(cfg.seed, kValidationStream + 300 + attempt));
    if (d3.validation.violations != 0) continue;
    Certificate cert;
    cert.kind = CertificateKind::uniform_attraction;
    cert.eps = eps;
    cert.K = K;
    const double T0 = *d3.time;
    const double delta2 = d3.value;
    cert.value = std::min(delta1, delta2);
    cert.time = T0;
    cert.scalars["delta1"] = delta1;
    cert.scalars["delta2"] = delta2;
    cert.scalars["T0"] = T0;
    const double horizon = attraction_horizon(T0, cfg);
    cert.scalars["horizon"] = horizon;
    cert.trace = {std::move(stab), std::move(d3)};
    cert.validation = validate_attraction(sys, K, eps, T0, cert.value, horizon, cfg, cfg.validation_trials,
                                          mix_seed(cfg.seed, kValidationStream + 400));
    if (cert.validation.violations != 0)
      fail(ErrorCode::conclusion_violation, "trajectories from K exceed eps after T0");
    return cert;
  }
  fail(ErrorCode::validation_failure, "delta3 conclusions at level delta1 violated at every safety factor");
}

Validation validate_certificate(const SystemDef& sys, const Certificate& cert, const EstimatorConfig& cfg,
                                std::uint64_t seed, int trials, double delta_override) {
  require(trials > 0, ErrorCode::precondition, "trials must be positive");
  const double delta = delta_override > 0.0 ? delta_override : cert.value;
  switch (cert.kind) {
    case CertificateKind::delta1:
      return validate_delta1(sys, *cert.eps, delta, cfg, SampleBudget{trials / 2, trials - trials / 2}, seed, false);
    case CertificateKind::tau: {
      const double v_radius = *cert.v_radius;
      const auto states = full_sample(*cert.K, SampleBudget{trials / 2, trials - trials / 2}, mix_seed(seed, kStateStream));
      Validation v = run_trials(
          states.size(),
          [&](std::size_t i) -> Records {
            const Trajectory traj = flow_autonomous(sys, states[i], cfg.horizon, cfg.tol);
            if (traj.status() != TrajectoryStatus::complete)
              return {record("existence:" + existence_note(traj), states[i], nullptr, traj.end_time(),
                             traj.end_time(), cfg.horizon)};
            const double worst = scan_max_dist(sys, traj, cert.value);
            const double at_T = cert.value <= traj.end_time() ? sys.state_dist(traj.eval(cert.value)) : 0.0;
            const double d = std::max(worst, at_T);
            if (d < v_radius) return {};
            return {record("containment", states[i], nullptr, cert.value, d, v_radius)};
          },
          false);
      v.seed = seed;
      v.horizon = cfg.horizon;
      return v;
    }
    case CertificateKind::delta2: {
      const double T = *cert.horizon_T;
      Validation v;
      if (T == 0.0) {
        v.seed = seed;
        v.delta = delta;
        return v;
      }
      const StateBank bank = make_bank(sys, cert.K->sample(cfg.states, mix_seed(seed, kStateStream)), T, cfg);
      return validate_perturbed(sys, bank, T, *cert.eps, delta, cfg, trials, seed, false, nullptr, false);
    }
    case CertificateKind::delta3:
      return validate_delta3(sys, *cert.K, *cert.eps, *cert.time, delta, cfg, trials, seed);
    case CertificateKind::stability_delta:
      return validate_stability(sys, delta, stability_check_of(cert, delta), cfg, trials, seed, false, false);
    case CertificateKind::uniform_attraction:
      return validate_attraction(sys, *cert.K, *cert.eps, *cert.time, delta, cert.scalars.at("horizon"), cfg,
                                 trials, seed);
  }
  fail(ErrorCode::precondition, "unknown certificate kind");
}

}  // namespace cics
