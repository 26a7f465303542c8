#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cics/input_signal.hpp"
#include "cics/system.hpp"
#include "cics/types.hpp"

namespace cics {

/// Integrator settings; recorded in every trajectory for reproducibility.
struct Tolerances {
  double rel = 1e-9;
  double abs = 1e-12;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;    // relative to max(1, |t|)
  std::int64_t max_steps = 10'000'000;
  double blowup_cap = 1e6;
  double exit_resolution = 1e-9;
  std::size_t memory_cap = 2'000'000;
};

enum class TrajectoryStatus { complete, blow_up, domain_exit, input_exhausted };

std::string_view to_string(TrajectoryStatus status);

/// Numerical solution of xdot = f(x, u) from x(0) = xi, computed with the
/// DOP853 pair and its seventh-order continuous extension.
class Trajectory {
 public:
  TrajectoryStatus status() const { return status_; }
  /// Right end of the maximal interval when status is blow_up or domain_exit;
  /// +inf otherwise.
  double sigma_est() const { return sigma_; }
  double requested_end() const { return requested_end_; }
  double end_time() const { return times_.back(); }
  bool decimated() const { return decimated_; }
  const std::string& diagnostic() const { return diagnostic_; }
  const Tolerances& tolerances() const { return tol_; }
  const InputSignal& input() const { return input_; }
  const Vector& initial_state() const { return states_.front(); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& states() const { return states_; }
  std::size_t size() const { return times_.size(); }
  std::size_t step_count() const { return steps_; }

  /// Dense-output state for 0 <= t <= end_time(); out-of-interval error
  /// otherwise.
  Vector eval(double t) const;

  /// Calls visit(t, x) at every node and at `subdivisions` interior points of
  /// each interval between consecutive nodes, in increasing time order.
  template <typename Visit>
  void scan(int subdivisions, Visit&& visit) const {
    visit(times_.front(), states_.front());
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
      const double a = times_[i], b = times_[i + 1];
      for (int j = 1; j <= subdivisions; ++j) {
        const double t = a + (b - a) * j / (subdivisions + 1);
        visit(t, eval(t));
      }
      visit(b, states_[i + 1]);
    }
  }

 private:
  friend class TrajectoryBuilder;

  struct Segment {
    double t0 = 0.0;
    double h = 0.0;
    Matrix coeff;  // n x 8 continuous-extension coefficients
  };

  TrajectoryStatus status_ = TrajectoryStatus::complete;
  double sigma_ = std::numeric_limits<double>::infinity();
  double requested_end_ = 0.0;
  bool decimated_ = false;
  std::string diagnostic_;
  Tolerances tol_;
  InputSignal input_ = InputSignal::constant(Vector(0));
  std::vector<double> times_;
  std::vector<Vector> states_;
  std::vector<Vector> derivs_;
  std::vector<Segment> segments_;  // segments_[i] spans nodes i -> i+1 unless decimated
  std::size_t steps_ = 0;
};

/// phi(t, xi, u) on [0, t_end], or up to the maximal interval / input horizon.
Trajectory flow(const SystemDef& sys, const Vector& xi, const InputSignal& u, double t_end,
                const Tolerances& tol = {});

/// phi(t, xi) with u held at u_bar.
Trajectory flow_autonomous(const SystemDef& sys, const Vector& xi, double t_end,
                           const Tolerances& tol = {});

/// Dense-output accessor, equivalent to traj.eval(t).
inline Vector eval_trajectory(const Trajectory& traj, double t) { return traj.eval(t); }

}  // namespace cics
