#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cics/compact_set.hpp"
#include "cics/input_signal.hpp"
#include "cics/integrator.hpp"
#include "cics/system.hpp"

namespace cics {

/// Sampling, bisection and validation settings shared by all estimators.
struct EstimatorConfig {
  SampleBudget states{64, 64};
  /// Random piecewise-constant input trials per delta candidate, in addition
  /// to the extreme constant inputs tried against every state sample.
  int input_trials = 200;
  int bisection_iterations = 20;
  double delta_min = 1e-9;
  /// Upper bisection bracket; unset means half the distance from x_bar to the
  /// boundary of the state domain, or 10 for the whole space.
  std::optional<double> delta_max;
  double safety = 0.9;
  /// Finite stand-in for "for all t >= 0".
  double horizon = 50.0;
  double t_grid = 0.05;
  double t_safety = 1.1;
  int induction_periods = 10;
  int validation_trials = 500;
  int max_switches = 10;
  /// Uniform comparison times per trajectory (nodes are always included).
  int comparison_points = 201;
  int tube_points = 101;
  /// Re-runs with a squared safety factor before validation failure is final.
  int validation_attempts = 3;
  std::uint64_t seed = 0;
  Tolerances tol;
};

enum class CertificateKind { delta1, delta2, tau, delta3, stability_delta, uniform_attraction };

std::string_view to_string(CertificateKind kind);

/// One violating trial, kept for debugging exports.
struct ViolationRecord {
  std::string condition;
  int trial = 0;
  Vector xi;
  std::string input;
  double time = 0.0;
  double observed = 0.0;
  double bound = 0.0;
};

/// Monte Carlo evidence attached to a certificate.
struct Validation {
  std::uint64_t seed = 0;
  int trials = 0;
  int violations = 0;
  double horizon = 0.0;
  double delta = 0.0;
  std::map<std::string, int> by_condition;
  std::vector<ViolationRecord> records;  // at most kMaxRecords

  static constexpr std::size_t kMaxRecords = 50;
  void add(ViolationRecord record);
};

/// An empirically validated estimate. `value` is delta for every kind except
/// tau, where it is the time T; `time` carries T (delta3) or T0 (uniform
/// attraction).
struct Certificate {
  CertificateKind kind = CertificateKind::delta1;
  std::optional<double> eps;
  std::optional<double> horizon_T;  // the T argument of delta2
  std::optional<double> v_radius;
  std::optional<CompactSet> K;

  double value = 0.0;
  std::optional<double> time;
  bool capped = false;  // bisection never failed below delta_max

  /// Named intermediate quantities of the construction.
  std::map<std::string, double> scalars;
  std::vector<Certificate> trace;
  Validation validation;

  const Certificate* find(CertificateKind sub) const;
};

/// Sampled autonomous tube {phi(t, xi) : t in [0, T], xi in K}.
struct TubeCloud {
  CompactSet K = CompactSet::singleton(Vector::Zero(1));
  double T = 0.0;
  std::vector<Vector> points;

  double distance(const Vector& x) const;
};

/// delta with |xi| <= delta  =>  |phi(t, xi)| < eps on the horizon.
Certificate estimate_delta1(const SystemDef& sys, double eps, const EstimatorConfig& cfg = {});

/// Time after which every sample of K stays inside the open ball of radius
/// v_radius around x_bar (checked up to the horizon), times t_safety.
Certificate estimate_tau(const SystemDef& sys, const CompactSet& K, double v_radius,
                         const EstimatorConfig& cfg = {});

/// delta with xi in K, ||u|| < delta  =>  |phi(t, xi, u) - phi(t, xi)| < eps on [0, T].
Certificate estimate_delta2(const SystemDef& sys, const CompactSet& K, double T, double eps,
                            const EstimatorConfig& cfg = {});

TubeCloud compute_tube(const SystemDef& sys, const CompactSet& K, double T,
                       const EstimatorConfig& cfg = {});

/// (T, delta) with T from estimate_tau at eps/2 and delta from estimate_delta2
/// at eps/2; validated against existence, tube distance and terminal size.
Certificate estimate_delta3(const SystemDef& sys, const CompactSet& K, double eps,
                            const EstimatorConfig& cfg = {});

/// delta with |xi| < delta, ||u|| < delta  =>  |phi(t, xi, u)| < eps.
Certificate stability_delta(const SystemDef& sys, double eps, const EstimatorConfig& cfg = {});

/// (T0, delta) with xi in K, ||u|| < delta  =>  |phi(t, xi, u)| <= eps for t >= T0.
Certificate uniform_attraction(const SystemDef& sys, const CompactSet& K, double eps,
                               const EstimatorConfig& cfg = {});

/// Re-runs the certificate's defining check with fresh trials. A positive
/// `delta_override` replaces the certified delta (monotone-acceptance checks).
Validation validate_certificate(const SystemDef& sys, const Certificate& cert,
                                const EstimatorConfig& cfg, std::uint64_t seed, int trials,
                                double delta_override = 0.0);

/// Inputs with sup distance < delta from u_bar: extreme constants along each
/// input axis (those inside U) followed by `random` piecewise-constant draws.
/// Exposed for tests.
std::vector<InputSignal> trial_inputs(const SystemDef& sys, double delta, double span, int random,
                                      int max_switches, std::uint64_t seed);

}  // namespace cics
