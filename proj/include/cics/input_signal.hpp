#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cics/types.hpp"

namespace cics {

/// A time-indexed input u(t) on [0, horizon). Signals are immutable; time
/// shifts and restrictions produce new signals.
///
/// Piecewise-constant signals are right-continuous: value k holds on
/// [breakpoints[k-1], breakpoints[k]) with value 0 on [0, breakpoints[0]).
class InputSignal {
 public:
  enum class Kind { constant, piecewise_constant, closed_form, exponential_decay };
  using Handle = std::function<Vector(double)>;

  static InputSignal constant(Vector value);
  static InputSignal piecewise_constant(std::vector<double> breakpoints, std::vector<Vector> values);
  /// `description` is carried into reports; it has no semantic effect.
  static InputSignal closed_form(int dim, Handle handle, std::string description = {});
  /// u(t) = offset + amplitude * exp(-rate * t), rate > 0.
  static InputSignal exponential_decay(Vector offset, Vector amplitude, double rate);

  InputSignal with_horizon(double horizon) const;

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double horizon() const { return horizon_; }
  bool bounded_horizon() const { return std::isfinite(horizon_); }

  Vector evaluate(double t) const;
  /// Value used inside an integration step that starts at `step_start`; for
  /// piecewise-constant signals the segment of the step start is held up to
  /// (and including) the step's right end.
  Vector evaluate_in_step(double t, double step_start) const;
  /// First breakpoint strictly after t, if any.
  std::optional<double> next_breakpoint(double t) const;
  /// The signal s -> u(s + shift), i.e. the restriction to [shift, horizon).
  InputSignal shifted(double shift) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Vector>& values() const { return values_; }
  const Vector& offset() const { return offset_; }
  const Vector& amplitude() const { return amplitude_; }
  double rate() const { return rate_; }
  double time_offset() const { return time_offset_; }
  const std::string& description() const { return description_; }

 private:
  std::size_t segment_index(double t) const;

  Kind kind_ = Kind::constant;
  int dim_ = 0;
  double horizon_ = std::numeric_limits<double>::infinity();
  std::vector<double> breakpoints_;
  std::vector<Vector> values_;
  Vector offset_, amplitude_;
  double rate_ = 0.0;
  std::shared_ptr<const Handle> handle_;
  double time_offset_ = 0.0;
  std::string description_;
};

struct NormOptions {
  /// Length of the sampled window used for closed-form signals on unbounded
  /// intervals; results on such windows are flagged horizon-truncated.
  double horizon_cap = 1000.0;
  int samples = 4096;
  /// Sampled distances beyond this raise an unbounded-signal error.
  double signal_cap = 1e6;
};

struct SupNorm {
  double value = 0.0;
  bool horizon_truncated = false;
};

/// sup over t in [a, b] of |u(t) - u_bar|. Pass b = +inf for [a, inf).
/// Exact for constant, piecewise-constant and exponential-decay signals.
SupNorm input_sup_norm(const InputSignal& u, const Vector& u_bar, double a, double b,
                       const NormOptions& options = {});

/// input_sup_norm over [t_from, inf).
SupNorm input_tail_norm(const InputSignal& u, const Vector& u_bar, double t_from,
                        const NormOptions& options = {});

}  // namespace cics
