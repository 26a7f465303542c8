#include <gtest/gtest.h>

#include <cmath>

#include "cics/error.hpp"
#include "cics/integrator.hpp"
#include "cics/random.hpp"
#include "oracles.hpp"
#include "test_systems.hpp"

using namespace cics;
using cics::testing::scalar;
using cics::testing::vec;

namespace {

struct RandomPiecewise {
  InputSignal signal;
  oracle::PiecewiseInput oracle;
};

RandomPiecewise random_piecewise(Rng& rng, int dim, double span, double amplitude) {
  const int switches = 1 + static_cast<int>(uniform01(rng) * 10);
  std::vector<double> bp;
  for (int i = 0; i < switches; ++i) bp.push_back(span * uniform01(rng));
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  std::vector<Vector> values;
  for (std::size_t i = 0; i <= bp.size(); ++i) {
    Vector v(dim);
    for (int j = 0; j < dim; ++j) v[j] = amplitude * (2.0 * uniform01(rng) - 1.0);
    values.push_back(v);
  }
  return {InputSignal::piecewise_constant(bp, values), {bp, values}};
}

double relative_error(const Vector& got, const Vector& want) {
  // Floor the denominator so zero crossings of the exact solution do not
  // dominate the statistic.
  return (got - want).norm() / std::max(want.norm(), 1e-3);
}

}  // namespace

TEST(Flow, ExponentialDecay) {
  const auto traj = flow_autonomous(cics::testing::linear_1d(), scalar(1.0), 1.0);
  EXPECT_EQ(traj.status(), TrajectoryStatus::complete);
  EXPECT_NEAR(traj.states().back()[0], std::exp(-1.0), 1e-6);
  EXPECT_GE(traj.end_time(), 1.0 - 1e-12);
  EXPECT_EQ(traj.times().front(), 0.0);
  EXPECT_EQ(traj.states().front()[0], 1.0);
}

TEST(Flow, CounterexampleAtUnitInputIsFrozen) {
  const auto traj = flow(cics::testing::counterexample(), scalar(2.0), InputSignal::constant(scalar(1.0)), 10.0);
  EXPECT_EQ(traj.status(), TrajectoryStatus::complete);
  for (const auto& x : traj.states()) EXPECT_EQ(x[0], 2.0);
}

TEST(Flow, EquilibriumIsFixedPoint) {
  for (const auto& sys : {cics::testing::linear_1d(), cics::testing::bistable(), cics::testing::spiral_2d()}) {
    const auto traj = flow_autonomous(sys, sys.x_bar(), 100.0);
    EXPECT_EQ(traj.status(), TrajectoryStatus::complete);
    for (const auto& x : traj.states()) EXPECT_LE((x - sys.x_bar()).norm(), 1e-9);
  }
}

TEST(Flow, QuadraticBlowUpTime) {
  const auto traj = flow_autonomous(cics::testing::quadratic_blowup(), scalar(1.0), 5.0);
  EXPECT_EQ(traj.status(), TrajectoryStatus::blow_up);
  EXPECT_NEAR(traj.sigma_est(), 1.0, 1e-3);
  EXPECT_LT(traj.end_time(), traj.sigma_est() + 1e-12);
  for (const auto& x : traj.states()) EXPECT_LE(x.norm(), traj.tolerances().blowup_cap);
  EXPECT_FALSE(traj.diagnostic().empty());
}

TEST(Flow, BlowUpTimeTracksInitialState) {
  for (double xi : {0.5, 2.0, 4.0}) {
    const auto traj = flow_autonomous(cics::testing::quadratic_blowup(), scalar(xi), 10.0);
    ASSERT_EQ(traj.status(), TrajectoryStatus::blow_up);
    EXPECT_NEAR(traj.sigma_est(), 1.0 / xi, 1e-3);
  }
}

TEST(FlowAutonomous, BistableAttractsInsideUnitInterval) {
  const auto sys = cics::testing::bistable();
  for (double xi : {0.5, -0.5}) {
    const auto traj = flow_autonomous(sys, scalar(xi), 10.0);
    EXPECT_EQ(traj.status(), TrajectoryStatus::complete);
    EXPECT_LT(std::abs(traj.states().back()[0]), 1e-3);
  }
}

TEST(FlowAutonomous, BistableEscapesOutsideUnitInterval) {
  const auto sys = cics::testing::bistable();
  for (double xi : {1.5, -1.5}) {
    const auto traj = flow_autonomous(sys, scalar(xi), 10.0);
    EXPECT_EQ(traj.status(), TrajectoryStatus::blow_up);
    // xdot = x^3 - x from 1.5 escapes at t = 0.5 ln(x^2/(x^2-1)).
    EXPECT_NEAR(traj.sigma_est(), 0.5 * std::log(2.25 / 1.25), 1e-3);
  }
}

TEST(EvalTrajectory, EndpointsAndAnalyticMidpoint) {
  const auto traj = flow_autonomous(cics::testing::linear_1d(), scalar(1.0), 2.0);
  EXPECT_EQ(eval_trajectory(traj, 0.0)[0], 1.0);
  EXPECT_NEAR(eval_trajectory(traj, std::log(2.0))[0], 0.5, 1e-6);
  EXPECT_THROW(eval_trajectory(traj, 2.5), Error);
  EXPECT_THROW(eval_trajectory(traj, -0.1), Error);
}

TEST(EvalTrajectory, BeyondSigmaIsOutOfInterval) {
  const auto traj = flow_autonomous(cics::testing::quadratic_blowup(), scalar(1.0), 5.0);
  try {
    eval_trajectory(traj, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_interval);
  }
}

TEST(FlowProperty, LinearOracleEquivalence1d) {
  Rng rng = make_rng(101, 0);
  const auto sys = cics::testing::linear_1d();
  for (int rep = 0; rep < 5; ++rep) {
    const auto in = random_piecewise(rng, 1, 8.0, 2.0);
    const double xi = 4.0 * uniform01(rng) - 2.0;
    const auto traj = flow(sys, scalar(xi), in.signal, 10.0);
    for (int i = 0; i < 100; ++i) {
      const double t = 10.0 * uniform01(rng);
      const Vector want = scalar(oracle::linear_1d(xi, in.oracle, t));
      EXPECT_LT(relative_error(traj.eval(t), want), 1e-6) << "t = " << t;
    }
  }
}

TEST(FlowProperty, LinearOracleEquivalenceSpiral) {
  Rng rng = make_rng(102, 0);
  const auto sys = cics::testing::spiral_2d();
  for (int rep = 0; rep < 5; ++rep) {
    const auto in = random_piecewise(rng, 2, 8.0, 1.0);
    const Vector xi = vec({2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0});
    const auto traj = flow(sys, xi, in.signal, 10.0);
    for (int i = 0; i < 100; ++i) {
      const double t = 10.0 * uniform01(rng);
      EXPECT_LT(relative_error(traj.eval(t), oracle::spiral(0.5, 2.0, xi, in.oracle, t)), 1e-6) << "t = " << t;
    }
  }
}

TEST(FlowProperty, BreakpointsAreStepBoundaries) {
  const auto u = InputSignal::piecewise_constant({0.3, 1.7}, {scalar(1.0), scalar(-1.0), scalar(0.5)});
  const auto traj = flow(cics::testing::linear_1d(), scalar(0.0), u, 3.0);
  for (double bp : {0.3, 1.7})
    EXPECT_TRUE(std::find(traj.times().begin(), traj.times().end(), bp) != traj.times().end()) << bp;
}

TEST(FlowProperty, ResidualOfDenseOutput) {
  Rng rng = make_rng(103, 0);
  const auto sys = cics::testing::bistable();
  const auto u = InputSignal::closed_form(1, [](double t) { return scalar(0.1 * std::sin(t)); });
  const auto traj = flow(sys, scalar(0.8), u, 10.0);
  const auto& tol = traj.tolerances();
  for (int i = 0; i < 50; ++i) {
    const double t = 0.01 + 9.98 * uniform01(rng);
    const double dt = 1e-5;
    const Vector fd = (traj.eval(t + dt) - traj.eval(t - dt)) / (2 * dt);
    const Vector f = eval_field(sys, traj.eval(t), u.evaluate(t));
    EXPECT_LE((fd - f).norm(), 100.0 * (tol.rel * f.norm() + tol.abs) + 1e-9) << "t = " << t;
  }
}

TEST(FlowProperty, SemigroupIdentity) {
  Rng rng = make_rng(104, 0);
  const auto sys = cics::testing::bistable();
  for (int rep = 0; rep < 20; ++rep) {
    const auto in = random_piecewise(rng, 1, 5.0, 0.2);
    const double xi = 1.6 * uniform01(rng) - 0.8;
    const double s = 0.1 + 2.0 * uniform01(rng), t = s + 0.1 + 3.0 * uniform01(rng);
    const auto whole = flow(sys, scalar(xi), in.signal, t);
    const auto first = flow(sys, scalar(xi), in.signal, s);
    const auto second = flow(sys, first.states().back(), in.signal.shifted(s), t - s);
    const double scale = 1e-9 * std::abs(whole.states().back()[0]) + 1e-12;
    EXPECT_LE(std::abs(second.states().back()[0] - whole.states().back()[0]), 10.0 * std::max(scale, 1e-10));
  }
}

TEST(Flow, DomainExitIsBisected) {
  SystemDef::Spec spec;
  spec.name = "drift";
  spec.dim = 1;
  spec.input_dim = 1;
  spec.field = [](const Vector&, const Vector& u) { return u; };
  spec.state_domain = Region::box(scalar(-1.0), scalar(2.0), true);
  spec.input_set = Region::whole(1, false);
  spec.x_bar = scalar(0.0);
  spec.u_bar = scalar(0.0);
  const SystemDef sys(spec);
  const auto traj = flow(sys, scalar(0.0), InputSignal::constant(scalar(1.0)), 5.0);
  EXPECT_EQ(traj.status(), TrajectoryStatus::domain_exit);
  EXPECT_NEAR(traj.sigma_est(), 2.0, 2e-9);
  for (const auto& x : traj.states()) EXPECT_TRUE(sys.state_domain().contains(x));
}

TEST(Flow, InputHorizonShorterThanRequest) {
  const auto u = InputSignal::constant(scalar(0.0)).with_horizon(3.0);
  const auto traj = flow(cics::testing::linear_1d(), scalar(1.0), u, 10.0);
  EXPECT_EQ(traj.status(), TrajectoryStatus::input_exhausted);
  EXPECT_NEAR(traj.end_time(), 3.0, 1e-12);
}

TEST(Flow, DecimationKeepsEndpointsAndAccuracy) {
  Tolerances tol;
  tol.memory_cap = 40;
  const auto traj = flow_autonomous(cics::testing::spiral_2d(), vec({1.0, 0.0}), 20.0, tol);
  EXPECT_TRUE(traj.decimated());
  EXPECT_LE(traj.size(), 40u);
  EXPECT_EQ(traj.times().front(), 0.0);
  EXPECT_DOUBLE_EQ(traj.end_time(), 20.0);
  const oracle::PiecewiseInput zero{{}, {Vector::Zero(2)}};
  // Hermite fallback is coarser but still tracks the solution.
  EXPECT_LT((traj.eval(7.3) - oracle::spiral(0.5, 2.0, vec({1.0, 0.0}), zero, 7.3)).norm(), 5e-2);
}

TEST(Flow, PreconditionViolations) {
  const auto sys = cics::testing::counterexample();
  EXPECT_THROW(flow(sys, scalar(1.0), InputSignal::constant(scalar(0.0)), 0.0), Error);
  EXPECT_THROW(flow(sys, vec({1.0, 2.0}), InputSignal::constant(scalar(0.0)), 1.0), Error);
}

TEST(Flow, IsDeterministic) {
  const auto sys = cics::testing::bistable();
  const auto u = InputSignal::piecewise_constant({0.5}, {scalar(0.1), scalar(-0.05)});
  const auto a = flow(sys, scalar(0.7), u, 5.0), b = flow(sys, scalar(0.7), u, 5.0);
  EXPECT_EQ(a.times(), b.times());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.states()[i], b.states()[i]);
}
