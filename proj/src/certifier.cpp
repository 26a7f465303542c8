#include "cics/certifier.hpp"

#include <algorithm>
#include <cmath>

#include "cics/error.hpp"
#include "cics/expression.hpp"

namespace cics {

namespace {

/// Bisection for the membership switch in (a, b]; returns the time on the
/// inside side.
double refine_crossing(const Trajectory& traj, const CompactSet& K, double tol, double a, double b, bool a_inside) {
  for (int i = 0; i < 60 && b - a > 1e-12; ++i) {
    const double mid = 0.5 * (a + b);
    const bool in = K.contains(traj.eval(mid), tol);
    (in == a_inside ? a : b) = mid;
  }
  return a_inside ? a : b;
}

TailRow tail_row(const SystemDef& sys, const InputSignal& u, double t, const NormOptions& norms) {
  const SupNorm s = input_tail_norm(u, sys.u_bar(), t, norms);
  return {t, s.value, s.horizon_truncated};
}

}  // namespace

std::string_view to_string(Conclusion c) {
  switch (c) {
    case Conclusion::converges: return "converges";
    case Conclusion::inconclusive: return "inconclusive";
    case Conclusion::hypothesis_failed: return "hypothesis-failed";
    case Conclusion::violated: return "violated";
  }
  return "unknown";
}

std::string_view to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::none: return "none";
    case Hypothesis::state_domain: return "state_domain";
    case Hypothesis::recurrence: return "recurrence";
    case Hypothesis::input_convergence: return "input_convergence";
  }
  return "unknown";
}

std::string_view to_string(LevelStatus s) {
  switch (s) {
    case LevelStatus::met: return "met";
    case LevelStatus::violated: return "violated";
    case LevelStatus::horizon_exhausted: return "horizon_exhausted";
    case LevelStatus::no_input_time: return "no_input_time";
  }
  return "unknown";
}

RecurrenceReport detect_recurrence(const Trajectory& traj, const CompactSet& K, double horizon,
                                   const RecurrenceOptions& options) {
  require(horizon > 0.0, ErrorCode::precondition, "horizon must be positive");
  require(horizon <= traj.end_time() + 1e-12, ErrorCode::out_of_interval,
          "horizon exceeds the trajectory's interval");
  require(options.step > 0.0, ErrorCode::precondition, "scan step must be positive");
  RecurrenceReport rep;
  rep.K = K;
  rep.horizon = horizon;
  const double tol = options.membership_tol;
  const auto n = static_cast<std::size_t>(std::ceil(horizon / options.step - 1e-9));
  bool prev_in = false;
  double prev_t = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = i == n ? horizon : horizon * static_cast<double>(i) / static_cast<double>(n);
    const bool in = K.contains(traj.eval(t), tol);
    if (i > 0 && in != prev_in) {
      const double c = refine_crossing(traj, K, tol, prev_t, t, prev_in);
      if (rep.visit_times.empty() || c > rep.visit_times.back()) rep.visit_times.push_back(c);
    }
    if (in && (rep.visit_times.empty() || t > rep.visit_times.back())) rep.visit_times.push_back(t);
    prev_in = in;
    prev_t = t;
  }
  if (rep.visit_times.empty()) {
    rep.gap_max = horizon;
  } else {
    double gap = horizon - rep.visit_times.back();
    for (std::size_t i = 1; i < rep.visit_times.size(); ++i)
      gap = std::max(gap, rep.visit_times[i] - rep.visit_times[i - 1]);
    rep.gap_max = gap;
  }
  rep.recurrent = !rep.visit_times.empty();
  for (double frac : options.checkpoints) {
    const double c = frac * horizon;
    rep.checkpoints.push_back(c);
    if (rep.visit_times.empty() || rep.visit_times.back() <= c) rep.recurrent = false;
  }
  return rep;
}

std::vector<double> default_eps_ladder(const SystemDef& sys, const Vector& xi) {
  double scale = sys.state_dist(xi);
  if (scale <= 0.0) scale = 1.0;
  return {0.5 * scale, 0.1 * scale, 0.02 * scale};
}

CicsVerdict check_cics(const SystemDef& sys, const Vector& xi, const InputSignal& u, const CompactSet& K,
                       const std::vector<double>& eps_ladder, const CicsConfig& cfg) {
  require(!eps_ladder.empty(), ErrorCode::precondition, "eps ladder is empty");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    require(eps_ladder[i] > 0.0, ErrorCode::precondition, "eps ladder entries must be positive");
    require(i == 0 || eps_ladder[i] < eps_ladder[i - 1], ErrorCode::precondition, "eps ladder must decrease");
  }
  require(cfg.horizon > 0.0, ErrorCode::precondition, "horizon must be positive");

  CicsVerdict v;
  v.xi = xi;
  v.horizon = cfg.horizon;
  v.trajectory = flow(sys, xi, u, cfg.horizon, cfg.estimator.tol);

  if (v.trajectory.status() != TrajectoryStatus::complete) {
    v.conclusion = Conclusion::hypothesis_failed;
    v.failed_hypothesis = Hypothesis::state_domain;
    v.reason = "solution ends at t = " + std::to_string(v.trajectory.end_time()) + " with status " +
               std::string(to_string(v.trajectory.status()));
    return v;
  }

  v.recurrence = detect_recurrence(v.trajectory, K, cfg.horizon, cfg.recurrence);
  if (!v.recurrence.recurrent) {
    v.conclusion = Conclusion::hypothesis_failed;
    v.failed_hypothesis = Hypothesis::recurrence;
    v.reason = v.recurrence.visit_times.empty()
                   ? "no visit to K on the horizon"
                   : "last visit to K at t = " + std::to_string(v.recurrence.visit_times.back());
    return v;
  }

  const int rows = std::max(cfg.tail_table_points, 2);
  for (int i = 0; i < rows; ++i)
    v.tail_table.push_back(tail_row(sys, u, cfg.horizon * i / (rows - 1), cfg.norms));

  const double grid = cfg.estimator.t_grid;
  const auto last_k = static_cast<long>(std::floor(cfg.horizon / grid + 1e-9));
  auto tail_at = [&](long k) { return input_tail_norm(u, sys.u_bar(), grid * k, cfg.norms).value; };

  for (double eps : eps_ladder) {
    LadderLevel level;
    level.eps = eps;
    level.attraction = uniform_attraction(sys, K, eps, cfg.estimator);
    level.delta = level.attraction.value;
    level.T0 = *level.attraction.time;

    // The tail norm is nonincreasing, so the first grid time below delta is
    // found by binary search.
    if (!(tail_at(last_k) < level.delta)) {
      level.status = LevelStatus::no_input_time;
      v.levels.push_back(std::move(level));
      continue;
    }
    long lo = -1, hi = last_k;
    while (hi - lo > 1) {
      const long mid = (lo + hi) / 2;
      (tail_at(mid) < level.delta ? hi : lo) = mid;
    }
    level.T1 = grid * hi;
    level.tail_at_T1 = tail_at(hi);

    const auto& visits = v.recurrence.visit_times;
    const auto it = std::lower_bound(visits.begin(), visits.end(), *level.T1);
    if (it == visits.end()) {
      level.status = LevelStatus::horizon_exhausted;
      v.levels.push_back(std::move(level));
      continue;
    }
    level.T2 = *it;
    level.T_conv = *level.T2 + level.T0;
    if (*level.T_conv + cfg.margin > cfg.horizon) {
      level.status = LevelStatus::horizon_exhausted;
      v.levels.push_back(std::move(level));
      continue;
    }
    double worst = sys.state_dist(v.trajectory.eval(*level.T_conv));
    v.trajectory.scan(3, [&](double t, const Vector& x) {
      if (t >= *level.T_conv) worst = std::max(worst, sys.state_dist(x));
    });
    level.max_dist_after = worst;
    level.status = worst < eps ? LevelStatus::met : LevelStatus::violated;
    v.levels.push_back(std::move(level));
  }

  auto any = [&](LevelStatus s) {
    return std::any_of(v.levels.begin(), v.levels.end(), [&](const LadderLevel& l) { return l.status == s; });
  };
  if (any(LevelStatus::no_input_time)) {
    v.conclusion = Conclusion::hypothesis_failed;
    v.failed_hypothesis = Hypothesis::input_convergence;
    v.reason = "input tail norm stays at or above delta on the horizon";
  } else if (any(LevelStatus::violated)) {
    v.conclusion = Conclusion::violated;
    v.reason = "state exceeds eps after T_conv";
  } else if (any(LevelStatus::horizon_exhausted)) {
    v.conclusion = Conclusion::inconclusive;
    v.reason = "horizon shorter than T_conv + margin";
  } else {
    v.conclusion = Conclusion::converges;
  }
  return v;
}

StatePath parse_path(const std::vector<std::string>& components) {
  require(!components.empty(), ErrorCode::config, "path needs at least one component");
  const Expression::Variables vars{{"t", 0}};
  std::vector<Expression> p, dp;
  std::string desc;
  for (const auto& c : components) {
    p.push_back(Expression::parse(c, vars, true));
    dp.push_back(p.back().derivative(0));
    desc += (desc.empty() ? "" : ", ") + c;
  }
  StatePath path;
  path.description = components.size() == 1 ? desc : "(" + desc + ")";
  path.value = [p](double t) {
    Vector x(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) x[static_cast<Eigen::Index>(i)] = p[i].evaluate({t});
    return x;
  };
  path.derivative = [dp](double t) {
    Vector x(static_cast<Eigen::Index>(dp.size()));
    for (std::size_t i = 0; i < dp.size(); ++i) x[static_cast<Eigen::Index>(i)] = dp[i].evaluate({t});
    return x;
  };
  return path;
}

FalsifyResult falsify_boundedness(const SystemDef& sys, const StatePath& path, const FalsifyConfig& cfg) {
  constexpr double kNominalTail = 1e-14;
  require(sys.input_affine().has_value(), ErrorCode::precondition,
          "falsification needs an input-affine system (drift + gain form)");
  require(cfg.horizon > 0.0, ErrorCode::precondition, "horizon must be positive");
  const InputAffineForm form = *sys.input_affine();
  const Vector u_bar = sys.u_bar();
  const double singular_tol = cfg.singular_tol;

  auto invert = [form, u_bar, singular_tol, path](double t) -> Vector {
    const Vector p = path.value(t);
    const Matrix h = form.gain(p);
    const Vector rhs = path.derivative(t) - form.drift(p);
    const Eigen::ColPivHouseholderQR<Matrix> qr(h);
    if (h.size() == 0 || qr.rank() < std::min(h.rows(), h.cols()) ||
        qr.maxPivot() <= singular_tol ||
        std::abs(qr.matrixR().diagonal()(qr.rank() - 1)) <= singular_tol)
      fail(ErrorCode::inversion_singularity, "input gain is singular at t = " + std::to_string(t));
    const Vector du = qr.solve(rhs);
    if ((h * du - rhs).norm() > 1e-9 * (1.0 + rhs.norm()))
      fail(ErrorCode::inversion_singularity, "path velocity not reachable through the input gain at t = " +
                                                 std::to_string(t));
    return u_bar + du;
  };

  FalsifyResult res;
  res.path = path;
  const int n = std::max(cfg.check_points, 2);
  for (int i = 0; i < n; ++i) {
    const double t = cfg.horizon * i / (n - 1);
    const Vector uv = invert(t);
    if (!uv.allFinite()) fail(ErrorCode::inversion_singularity, "non-finite input at t = " + std::to_string(t));
    if (!sys.input_set().contains(uv))
      fail(ErrorCode::domain_violation, "required input leaves U at t = " + std::to_string(t));
  }

  // A handle evaluated beyond the checked grid must not throw mid-sampling;
  // singular points there surface as non-finite values.
  const int m = sys.input_dim();
  auto handle = [invert, m](double t) -> Vector {
    try {
      return invert(t);
    } catch (const Error&) {
      return Vector::Constant(m, std::numeric_limits<double>::quiet_NaN());
    }
  };
  res.input = InputSignal::closed_form(sys.input_dim(), handle, "inverse(" + path.description + ")");

  try {
    for (double frac : {0.125, 0.25, 0.5, 1.0})
      res.tail_ladder.push_back(tail_row(sys, res.input, frac * cfg.horizon, cfg.norms));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::unbounded_signal) fail(ErrorCode::non_converging_input, e.what());
    throw;
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < res.tail_ladder.size(); ++i)
    decreasing = decreasing && res.tail_ladder[i].tail < res.tail_ladder[i - 1].tail;
  // An input already at u_bar (equilibrium path) has trivially converged.
  const bool at_nominal = res.tail_ladder.front().tail <= kNominalTail;
  if (!std::isfinite(res.tail_ladder.front().tail) ||
      (!at_nominal && (!decreasing || !(res.tail_ladder.back().tail < 0.5 * res.tail_ladder.front().tail))))
    fail(ErrorCode::non_converging_input, "constructed input does not decay toward u_bar");

  const Vector xi = path.value(0.0);
  require(sys.state_domain().contains(xi), ErrorCode::domain_violation, "path starts outside the state domain");
  res.trajectory = flow(sys, xi, res.input, cfg.horizon, cfg.tol);
  if (res.trajectory.status() != TrajectoryStatus::complete)
    fail(ErrorCode::validation_failure, "re-integrated trajectory ends early with status " +
                                            std::string(to_string(res.trajectory.status())));
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = cfg.horizon * i / (n - 1);
    const Vector p = path.value(t);
    err = std::max(err, (res.trajectory.eval(t) - p).norm() / (1.0 + p.norm()));
  }
  res.tracking_error = err;
  if (err > cfg.tracking_tol)
    fail(ErrorCode::validation_failure, "re-integrated trajectory drifts from the designed path (relative error " +
                                            std::to_string(err) + ")");
  return res;
}

NotIssReport demo_not_iss(const SystemDef& sys, const NotIssConfig& cfg) {
  require(sys.dim() == 1 && sys.input_dim() == 1, ErrorCode::precondition, "the demonstration is scalar");
  NotIssReport rep;

  rep.stability_holds = true;
  for (double eps : cfg.stability_eps) {
    rep.stability.push_back(stability_delta(sys, eps, cfg.cics.estimator));
    rep.stability_holds = rep.stability_holds && rep.stability.back().validation.violations == 0;
  }

  const Vector xi = Vector::Constant(1, cfg.cics_xi);
  const InputSignal decay = InputSignal::exponential_decay(sys.u_bar(), Vector::Constant(1, cfg.decay_amplitude),
                                                           cfg.decay_rate);
  const CompactSet K = CompactSet::box(sys.x_bar().array() - cfg.K_half_width,
                                       sys.x_bar().array() + cfg.K_half_width, cfg.cics.estimator.states);
  rep.cics = check_cics(sys, xi, decay, K, default_eps_ladder(sys, xi), cfg.cics);
  rep.cics_holds = rep.cics.conclusion == Conclusion::converges;

  const Vector xi_c = Vector::Constant(1, cfg.constant_xi);
  rep.constant_run = flow(sys, xi_c, InputSignal::constant(Vector::Constant(1, cfg.constant_input)),
                          cfg.constant_horizon, cfg.cics.estimator.tol);
  double dev = 0.0;
  rep.constant_run.scan(3, [&](double, const Vector& x) { dev = std::max(dev, (x - xi_c).norm()); });
  rep.max_deviation = dev;
  rep.constant_input_stalls = rep.constant_run.status() == TrajectoryStatus::complete &&
                              dev < cfg.constant_tolerance && sys.state_dist(xi_c) > cfg.constant_tolerance;
  return rep;
}

}  // namespace cics
