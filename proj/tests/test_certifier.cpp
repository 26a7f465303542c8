#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cics/certifier.hpp"
#include "cics/error.hpp"
#include "cics/gallery.hpp"
#include "cics/integrator.hpp"
#include "cics/serialize.hpp"
#include "test_systems.hpp"

using namespace cics;
using namespace cics::testing;

namespace {

CompactSet interval(double lo, double hi) { return CompactSet::box(scalar(lo), scalar(hi)); }

InputSignal decaying(double amplitude) {
  return InputSignal::exponential_decay(scalar(0.0), scalar(amplitude), 1.0);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::precondition;
}

// Re-derives the verdict's claims from the stored trajectory and input only.
void check_level_consistency(const SystemDef& sys, const CicsVerdict& v, const InputSignal& u) {
  for (const auto& level : v.levels) {
    if (level.status != LevelStatus::met) continue;
    ASSERT_TRUE(level.T1 && level.T2 && level.T_conv);
    EXPECT_EQ(*level.T_conv, *level.T2 + level.T0);
    EXPECT_GE(*level.T2, *level.T1);
    EXPECT_TRUE(std::find(v.recurrence.visit_times.begin(), v.recurrence.visit_times.end(), *level.T2) !=
                v.recurrence.visit_times.end());
    EXPECT_LT(input_tail_norm(u, sys.u_bar(), *level.T1).value, level.delta);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.trajectory.times().size(); ++i)
      if (v.trajectory.times()[i] >= *level.T_conv) worst = std::max(worst, sys.state_dist(v.trajectory.states()[i]));
    for (double t = *level.T_conv; t <= v.horizon; t += 0.01)
      worst = std::max(worst, sys.state_dist(v.trajectory.eval(t)));
    EXPECT_LT(worst, level.eps);
  }
}

}  // namespace

// ---- recurrence ------------------------------------------------------------

TEST(Recurrence, EquilibriumTrajectoryIsRecurrent) {
  const Trajectory traj = flow_autonomous(zero_field(), scalar(0.0), 10.0);
  const RecurrenceOptions opts;
  const RecurrenceReport r = detect_recurrence(traj, CompactSet::ball(scalar(0.0), 0.1), 10.0, opts);
  EXPECT_TRUE(r.recurrent);
  EXPECT_LE(r.gap_max, opts.step + 1e-9);
}

TEST(Recurrence, DecayFirstVisitAtLogFive) {
  const SystemDef sys = scalar_system("decay", [](double x, double) { return -x; });
  const Trajectory traj = flow_autonomous(sys, scalar(5.0), 20.0);
  const RecurrenceReport r = detect_recurrence(traj, interval(-1, 1), 20.0);
  EXPECT_TRUE(r.recurrent);
  ASSERT_FALSE(r.visit_times.empty());
  EXPECT_NEAR(r.visit_times.front(), std::log(5.0), 1e-3);
  for (double t : r.visit_times) EXPECT_LE(std::abs(traj.eval(t)[0]), 1.0 + 1e-9);
}

TEST(Recurrence, DivergentPathLeavesAfterTimeOne) {
  const SystemDef drift = scalar_system("drift", [](double, double u) { return u; });
  const Trajectory traj = flow(drift, scalar(1.0), InputSignal::constant(scalar(1.0)), 20.0);
  const RecurrenceReport r = detect_recurrence(traj, interval(0, 2), 20.0);
  EXPECT_FALSE(r.recurrent);
  ASSERT_FALSE(r.visit_times.empty());
  EXPECT_NEAR(r.visit_times.back(), 1.0, 1e-6);
  EXPECT_NEAR(r.gap_max, 19.0, 1e-6);
}

TEST(Recurrence, HorizonBeyondTrajectoryIsAnError) {
  const Trajectory traj = flow_autonomous(zero_field(), scalar(0.0), 5.0);
  EXPECT_THROW(detect_recurrence(traj, interval(-1, 1), 10.0), Error);
}

// ---- check_cics ------------------------------------------------------------

TEST(Cics, LinearConvergesAtEveryLevel) {
  const SystemDef sys = linear_1d();
  const InputSignal u = decaying(1.0);
  const CicsVerdict v = check_cics(sys, scalar(3.0), u, interval(-4, 4), {0.5, 0.1, 0.02});
  EXPECT_EQ(v.conclusion, Conclusion::converges) << v.reason;
  ASSERT_EQ(v.levels.size(), 3u);
  for (const auto& l : v.levels) EXPECT_EQ(l.status, LevelStatus::met);
  check_level_consistency(sys, v, u);
  // Analytic solution 3 e^{-t} + t e^{-t}.
  for (double t = 0.0; t <= 10.0; t += 0.5) EXPECT_NEAR(v.trajectory.eval(t)[0], (3.0 + t) * std::exp(-t), 1e-7);
}

TEST(Cics, ConstantNominalInputReducesToAttraction) {
  const SystemDef sys = bistable();
  const InputSignal u = InputSignal::constant(scalar(0.0));
  const CicsVerdict v = check_cics(sys, scalar(0.5), u, interval(-0.9, 0.9), {0.25, 0.05});
  EXPECT_EQ(v.conclusion, Conclusion::converges) << v.reason;
  check_level_consistency(sys, v, u);
}

TEST(Cics, NonConvergingInputFailsHypothesis) {
  const CicsVerdict v =
      check_cics(counterexample(), scalar(2.0), InputSignal::constant(scalar(1.0)), interval(-3, 3), {1.0, 0.2});
  EXPECT_EQ(v.conclusion, Conclusion::hypothesis_failed);
  EXPECT_EQ(v.failed_hypothesis, Hypothesis::input_convergence);
}

TEST(Cics, ShortHorizonIsInconclusive) {
  CicsConfig cfg;
  cfg.horizon = 8.0;
  const CicsVerdict v = check_cics(linear_1d(), scalar(3.0), decaying(1.0), interval(-4, 4), {0.02}, cfg);
  EXPECT_EQ(v.conclusion, Conclusion::inconclusive);
  EXPECT_EQ(v.levels.front().status, LevelStatus::horizon_exhausted);
}

TEST(Cics, DefaultLadderScalesWithInitialDistance) {
  const auto ladder = default_eps_ladder(linear_1d(), scalar(3.0));
  ASSERT_EQ(ladder.size(), 3u);
  EXPECT_DOUBLE_EQ(ladder[0], 1.5);
  EXPECT_DOUBLE_EQ(ladder[1], 0.3);
  EXPECT_DOUBLE_EQ(ladder[2], 0.06);
  const auto at_eq = default_eps_ladder(linear_1d(), scalar(0.0));
  EXPECT_DOUBLE_EQ(at_eq[0], 0.5);
}

TEST(Cics, RejectsIncreasingLadder) {
  EXPECT_THROW(check_cics(linear_1d(), scalar(1.0), decaying(1.0), interval(-2, 2), {0.1, 0.5}), Error);
}

TEST(Cics, SerializedVerdictIsDeterministic) {
  const auto run = [] {
    return to_json(check_cics(linear_1d(), scalar(3.0), decaying(1.0), interval(-4, 4), {0.5, 0.1})).dump();
  };
  EXPECT_EQ(run(), run());
}

// ---- falsification ---------------------------------------------------------

TEST(Falsify, DestabilizableInversionMatchesClosedForm) {
  const SystemDef& sys = gallery_entry("destabilizable-1d").sys;
  const FalsifyResult r = falsify_boundedness(sys, parse_path({"t + 1"}));
  for (int k = 0; k < 100; ++k) {
    const double t = 10.0 * k / 99.0;
    const double expected = (t + 2.0) / (t * t + 2.0 * t + 2.0);
    EXPECT_NEAR(r.input.evaluate(t)[0], expected, 1e-9) << t;
    // u (1 + x^2) - x reproduces the path derivative 1.
    const double x = t + 1.0;
    EXPECT_NEAR(r.input.evaluate(t)[0] * (1.0 + x * x) - x, 1.0, 1e-9);
  }
  EXPECT_LT(r.tracking_error, 1e-6);
  ASSERT_EQ(r.tail_ladder.size(), 4u);
  for (std::size_t i = 1; i < r.tail_ladder.size(); ++i) EXPECT_LT(r.tail_ladder[i].tail, r.tail_ladder[i - 1].tail);
}

TEST(Falsify, RecurrenceHypothesisIsLoadBearing) {
  const SystemDef& sys = gallery_entry("destabilizable-1d").sys;
  const FalsifyResult r = falsify_boundedness(sys, parse_path({"t + 1"}));
  CicsConfig cfg;
  cfg.horizon = 10.0;
  const CicsVerdict v = check_cics(sys, scalar(1.0), r.input, interval(0, 2), default_eps_ladder(sys, scalar(1.0)), cfg);
  EXPECT_FALSE(v.recurrence.recurrent);
  EXPECT_EQ(v.conclusion, Conclusion::hypothesis_failed);
  EXPECT_EQ(v.failed_hypothesis, Hypothesis::recurrence);
}

TEST(Falsify, EquilibriumPathGivesNominalInput) {
  const SystemDef& sys = gallery_entry("destabilizable-1d").sys;
  const FalsifyResult r = falsify_boundedness(sys, parse_path({"0"}));
  for (double t = 0.0; t <= 10.0; t += 0.25) EXPECT_NEAR(r.input.evaluate(t)[0], 0.0, 1e-15);
}

TEST(Falsify, LinearSystemNeedsGrowingInput) {
  const SystemDef& sys = gallery_entry("linear-1d").sys;
  EXPECT_EQ(code_of([&] { falsify_boundedness(sys, parse_path({"t + 1"})); }), ErrorCode::non_converging_input);
}

TEST(Falsify, VanishingGainIsSingular) {
  // xdot = -x + x u with unconstrained input: the gain x vanishes where the
  // path t - 1 crosses zero while the path still moves.
  SystemDef::Spec s;
  s.name = "bilinear";
  s.dim = 1;
  s.input_dim = 1;
  s.field = [](const Vector& x, const Vector& u) { return scalar(-x[0] + x[0] * u[0]); };
  s.input_affine = InputAffineForm{[](const Vector& x) { return scalar(-x[0]); },
                                   [](const Vector& x) { return Matrix::Constant(1, 1, x[0]); }};
  s.state_domain = Region::whole(1, true);
  s.input_set = Region::whole(1, false);
  s.x_bar = scalar(0.0);
  s.u_bar = scalar(0.0);
  const SystemDef sys(std::move(s));
  EXPECT_EQ(code_of([&] { falsify_boundedness(sys, parse_path({"t - 1"})); }), ErrorCode::inversion_singularity);
}

TEST(Falsify, RequiredInputOutsideInputSet) {
  // On the counterexample the inversion of t - 1 needs t / (t - 1) < 0 before t = 1.
  const SystemDef& sys = gallery_entry("sontag-counterexample").sys;
  EXPECT_EQ(code_of([&] { falsify_boundedness(sys, parse_path({"t - 1"})); }), ErrorCode::domain_violation);
}

TEST(Falsify, RequiresInputAffineForm) {
  EXPECT_EQ(code_of([] { falsify_boundedness(linear_1d(), parse_path({"t + 1"})); }), ErrorCode::precondition);
}

// ---- non-ISS demonstration -------------------------------------------------

TEST(NotIss, AllThreePartsHold) {
  const NotIssReport r = demo_not_iss(gallery_entry("sontag-counterexample").sys);
  EXPECT_TRUE(r.stability_holds);
  ASSERT_FALSE(r.stability.empty());
  EXPECT_GE(r.stability.front().value, 0.09);
  EXPECT_LE(r.stability.front().value, 0.1);
  EXPECT_TRUE(r.cics_holds);
  EXPECT_EQ(r.cics.conclusion, Conclusion::converges);
  EXPECT_TRUE(r.constant_input_stalls);
  EXPECT_LT(r.max_deviation, 1e-6);
  EXPECT_GE(r.constant_run.end_time(), 50.0);
}
