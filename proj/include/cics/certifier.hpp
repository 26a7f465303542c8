#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cics/compact_set.hpp"
#include "cics/estimators.hpp"
#include "cics/input_signal.hpp"
#include "cics/integrator.hpp"
#include "cics/system.hpp"

namespace cics {

struct RecurrenceOptions {
  /// Scan step of the membership grid; crossings are refined by bisection.
  double step = 0.01;
  /// Fractions of the horizon after which a visit must exist.
  std::vector<double> checkpoints{0.25, 0.5, 0.75, 0.95};
  double membership_tol = 1e-9;
};

/// Finite-horizon evidence for K-recurrence. `recurrent` means visits exist
/// after every checkpoint; it never asserts the unbounded property.
struct RecurrenceReport {
  CompactSet K = CompactSet::singleton(Vector::Zero(1));
  double horizon = 0.0;
  std::vector<double> visit_times;
  std::vector<double> checkpoints;  // absolute times
  double gap_max = 0.0;
  bool recurrent = false;
};

RecurrenceReport detect_recurrence(const Trajectory& traj, const CompactSet& K, double horizon,
                                   const RecurrenceOptions& options = {});

struct CicsConfig {
  EstimatorConfig estimator;
  double horizon = 50.0;
  /// Required slack between T_conv and the horizon.
  double margin = 5.0;
  RecurrenceOptions recurrence;
  NormOptions norms;
  int tail_table_points = 11;
};

enum class Conclusion { converges, inconclusive, hypothesis_failed, violated };
enum class Hypothesis { none, state_domain, recurrence, input_convergence };
enum class LevelStatus { met, violated, horizon_exhausted, no_input_time };

std::string_view to_string(Conclusion c);
std::string_view to_string(Hypothesis h);
std::string_view to_string(LevelStatus s);

struct TailRow {
  double t = 0.0;
  double tail = 0.0;
  bool truncated = false;
};

/// One eps level: T1 from the input tail, T2 the first visit to K at or after
/// T1, and T_conv = T2 + T0.
struct LadderLevel {
  double eps = 0.0;
  LevelStatus status = LevelStatus::horizon_exhausted;
  Certificate attraction;
  double delta = 0.0;
  double T0 = 0.0;
  std::optional<double> T1, T2, T_conv;
  double tail_at_T1 = 0.0;
  /// sup of |x(t)| over sampled t in [T_conv, horizon].
  double max_dist_after = 0.0;
};

struct CicsVerdict {
  Vector xi;
  double horizon = 0.0;
  Trajectory trajectory;
  RecurrenceReport recurrence;
  std::vector<TailRow> tail_table;
  std::vector<LadderLevel> levels;
  Conclusion conclusion = Conclusion::inconclusive;
  Hypothesis failed_hypothesis = Hypothesis::none;
  std::string reason;
};

/// Default ladder [0.5, 0.1, 0.02] scaled by |xi| (or by 1 when xi = x_bar).
std::vector<double> default_eps_ladder(const SystemDef& sys, const Vector& xi);

CicsVerdict check_cics(const SystemDef& sys, const Vector& xi, const InputSignal& u, const CompactSet& K,
                       const std::vector<double>& eps_ladder, const CicsConfig& cfg = {});

/// A designed state trajectory p(t) with its time derivative.
struct StatePath {
  std::function<Vector(double)> value;
  std::function<Vector(double)> derivative;
  std::string description;
};

/// Path given componentwise as expressions in t (exp, sin, cos, sqrt allowed).
StatePath parse_path(const std::vector<std::string>& components);

struct FalsifyConfig {
  double horizon = 10.0;
  Tolerances tol{1e-12, 1e-14};
  /// Allowed |x(t) - p(t)| / (1 + |p(t)|) on the check grid.
  double tracking_tol = 1e-6;
  int check_points = 1001;
  double singular_tol = 1e-10;
  NormOptions norms;
};

struct FalsifyResult {
  StatePath path;
  InputSignal input = InputSignal::constant(Vector(0));
  Trajectory trajectory;
  double tracking_error = 0.0;
  /// (t, tail norm) on the ladder horizon/8, /4, /2, horizon.
  std::vector<TailRow> tail_ladder;
};

/// Inverts an input-affine system along `path`:
/// u(t) = u_bar + gain(p)^-1 (p'(t) - drift(p)).
FalsifyResult falsify_boundedness(const SystemDef& sys, const StatePath& path, const FalsifyConfig& cfg = {});

struct NotIssConfig {
  std::vector<double> stability_eps{0.1};
  double cics_xi = 1.0;
  double decay_amplitude = 0.5;
  double decay_rate = 1.0;
  double K_half_width = 2.0;
  double constant_xi = 2.0;
  double constant_input = 1.0;
  double constant_horizon = 50.0;
  double constant_tolerance = 1e-6;
  CicsConfig cics;
};

struct NotIssReport {
  std::vector<Certificate> stability;
  CicsVerdict cics;
  Trajectory constant_run;
  double max_deviation = 0.0;
  bool stability_holds = false;
  bool cics_holds = false;
  bool constant_input_stalls = false;
};

/// Three-part demonstration on a scalar system with U = [0, 1]: stability
/// certificates, convergence under a decaying input, and a constant input
/// that freezes the state away from x_bar.
NotIssReport demo_not_iss(const SystemDef& sys, const NotIssConfig& cfg = {});

}  // namespace cics
