#include "cics/input_signal.hpp"

#include <algorithm>
#include <cmath>

#include "cics/error.hpp"

namespace cics {

InputSignal InputSignal::constant(Vector value) {
  require(value.allFinite(), ErrorCode::precondition, "constant input must be finite");
  InputSignal s;
  s.kind_ = Kind::constant;
  s.dim_ = static_cast<int>(value.size());
  s.values_ = {std::move(value)};
  return s;
}

InputSignal InputSignal::piecewise_constant(std::vector<double> breakpoints, std::vector<Vector> values) {
  require(values.size() == breakpoints.size() + 1, ErrorCode::precondition,
          "piecewise-constant input needs one more value than breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    require(std::isfinite(breakpoints[i]) && breakpoints[i] > 0.0, ErrorCode::precondition,
            "breakpoints must be finite and positive");
    require(i == 0 || breakpoints[i] > breakpoints[i - 1], ErrorCode::precondition,
            "breakpoints must be strictly increasing");
  }
  const auto dim = values.front().size();
  for (const auto& v : values) {
    require(v.size() == dim && v.allFinite(), ErrorCode::precondition,
            "piecewise-constant values must be finite and share a dimension");
  }
  InputSignal s;
  s.kind_ = Kind::piecewise_constant;
  s.dim_ = static_cast<int>(dim);
  s.breakpoints_ = std::move(breakpoints);
  s.values_ = std::move(values);
  return s;
}

InputSignal InputSignal::closed_form(int dim, Handle handle, std::string description) {
  require(static_cast<bool>(handle), ErrorCode::precondition, "closed-form input needs a handle");
  InputSignal s;
  s.kind_ = Kind::closed_form;
  s.dim_ = dim;
  s.handle_ = std::make_shared<const Handle>(std::move(handle));
  s.description_ = std::move(description);
  return s;
}

InputSignal InputSignal::exponential_decay(Vector offset, Vector amplitude, double rate) {
  require(offset.size() == amplitude.size(), ErrorCode::precondition,
          "exponential-decay offset and amplitude differ in dimension");
  require(offset.allFinite() && amplitude.allFinite(), ErrorCode::precondition,
          "exponential-decay parameters must be finite");
  require(rate > 0.0 && std::isfinite(rate), ErrorCode::precondition, "decay rate must be positive");
  InputSignal s;
  s.kind_ = Kind::exponential_decay;
  s.dim_ = static_cast<int>(offset.size());
  s.offset_ = std::move(offset);
  s.amplitude_ = std::move(amplitude);
  s.rate_ = rate;
  return s;
}

InputSignal InputSignal::with_horizon(double horizon) const {
  require(horizon > 0.0, ErrorCode::precondition, "input horizon must be positive");
  InputSignal s = *this;
  s.horizon_ = horizon;
  return s;
}

std::size_t InputSignal::segment_index(double t) const {
  // Number of breakpoints <= t.
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) -
                                  breakpoints_.begin());
}

Vector InputSignal::evaluate(double t) const {
  switch (kind_) {
    case Kind::constant: return values_.front();
    case Kind::piecewise_constant: return values_[segment_index(t)];
    case Kind::exponential_decay: return offset_ + amplitude_ * std::exp(-rate_ * t);
    case Kind::closed_form: {
      Vector v = (*handle_)(t + time_offset_);
      require(v.size() == dim_, ErrorCode::precondition, "closed-form input returned wrong dimension");
      return v;
    }
  }
  return Vector();
}

Vector InputSignal::evaluate_in_step(double t, double step_start) const {
  if (kind_ == Kind::piecewise_constant) return values_[segment_index(step_start)];
  return evaluate(t);
}

std::optional<double> InputSignal::next_breakpoint(double t) const {
  if (kind_ != Kind::piecewise_constant) return std::nullopt;
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.end()) return std::nullopt;
  return *it;
}

InputSignal InputSignal::shifted(double shift) const {
  require(shift >= 0.0 && shift < horizon_, ErrorCode::precondition,
          "input shift must lie inside the signal horizon");
  InputSignal s = *this;
  if (std::isfinite(horizon_)) s.horizon_ = horizon_ - shift;
  switch (kind_) {
    case Kind::constant: break;
    case Kind::piecewise_constant: {
      const std::size_t first = segment_index(shift);
      s.breakpoints_.clear();
      s.values_.clear();
      s.values_.push_back(values_[first]);
      for (std::size_t k = first; k < breakpoints_.size(); ++k) {
        s.breakpoints_.push_back(breakpoints_[k] - shift);
        s.values_.push_back(values_[k + 1]);
      }
      break;
    }
    case Kind::exponential_decay: s.amplitude_ = amplitude_ * std::exp(-rate_ * shift); break;
    case Kind::closed_form: s.time_offset_ = time_offset_ + shift; break;
  }
  return s;
}

namespace {

double checked_dist(const InputSignal& u, const Vector& u_bar, double t, const NormOptions& options) {
  const Vector v = u.evaluate(t);
  require(v.allFinite(), ErrorCode::non_finite, "input signal evaluated to a non-finite value");
  const double d = (v - u_bar).norm();
  if (d > options.signal_cap) {
    fail(ErrorCode::unbounded_signal,
         "input signal exceeds the configured cap at t = " + std::to_string(t));
  }
  return d;
}

double sampled_sup(const InputSignal& u, const Vector& u_bar, double a, double b,
                   const NormOptions& options) {
  const int n = std::max(2, options.samples);
  double best = checked_dist(u, u_bar, a, options);
  double best_t = a;
  auto visit = [&](double t) {
    const double d = checked_dist(u, u_bar, t, options);
    if (d > best) {
      best = d;
      best_t = t;
    }
  };
  visit(b);
  const double len = b - a;
  if (len <= 0.0) return best;
  for (int i = 1; i < n; ++i) visit(a + len * static_cast<double>(i) / n);
  // Geometric refinement near the left end catches fast transients on long windows.
  for (int i = 0; i < n / 8; ++i) visit(a + len * std::pow(2.0, -1.0 - 0.25 * i));
  // Golden-section polish around the best sample.
  const double h = len / n;
  double lo = std::max(a, best_t - h), hi = std::min(b, best_t + h);
  constexpr double g = 0.6180339887498949;
  for (int it = 0; it < 60 && hi - lo > 1e-14 * (1.0 + std::abs(best_t)); ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    const double d1 = checked_dist(u, u_bar, m1, options), d2 = checked_dist(u, u_bar, m2, options);
    best = std::max({best, d1, d2});
    if (d1 > d2) hi = m2; else lo = m1;
  }
  return best;
}

}  // namespace

SupNorm input_sup_norm(const InputSignal& u, const Vector& u_bar, double a, double b,
                       const NormOptions& options) {
  require(u_bar.size() == u.dim(), ErrorCode::precondition, "reference input has the wrong dimension");
  require(std::isfinite(a) && a >= 0.0 && b >= a, ErrorCode::precondition,
          "sup-norm interval must satisfy 0 <= a <= b");
  if (u.bounded_horizon()) {
    require(a < u.horizon(), ErrorCode::precondition, "sup-norm interval starts past the signal horizon");
    if (std::isinf(b)) {
      b = u.horizon();
    } else {
      require(b <= u.horizon(), ErrorCode::precondition, "sup-norm interval exceeds the signal horizon");
    }
  }
  SupNorm out;
  switch (u.kind()) {
    case InputSignal::Kind::constant:
      out.value = (u.values().front() - u_bar).norm();
      return out;
    case InputSignal::Kind::piecewise_constant: {
      const auto& bp = u.breakpoints();
      const auto& vals = u.values();
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const double seg_lo = k == 0 ? 0.0 : bp[k - 1];
        const double seg_hi = k < bp.size() ? bp[k] : std::numeric_limits<double>::infinity();
        // Segment [seg_lo, seg_hi) meets [a, b].
        if (seg_lo <= b && seg_hi > a) out.value = std::max(out.value, (vals[k] - u_bar).norm());
      }
      return out;
    }
    case InputSignal::Kind::exponential_decay: {
      // |c + A s| is convex in s = exp(-rate t), so the max sits at an endpoint.
      const Vector c = u.offset() - u_bar;
      const double s_a = std::exp(-u.rate() * a);
      const double s_b = std::isinf(b) ? 0.0 : std::exp(-u.rate() * b);
      out.value = std::max((c + u.amplitude() * s_a).norm(), (c + u.amplitude() * s_b).norm());
      return out;
    }
    case InputSignal::Kind::closed_form: {
      double end = b;
      if (std::isinf(b) || b - a > options.horizon_cap) {
        end = a + options.horizon_cap;
        out.horizon_truncated = true;
      }
      out.value = sampled_sup(u, u_bar, a, end, options);
      return out;
    }
  }
  return out;
}

SupNorm input_tail_norm(const InputSignal& u, const Vector& u_bar, double t_from,
                        const NormOptions& options) {
  require(t_from >= 0.0, ErrorCode::precondition, "tail norm needs t_from >= 0");
  return input_sup_norm(u, u_bar, t_from, std::numeric_limits<double>::infinity(), options);
}

}  // namespace cics
