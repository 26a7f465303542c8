#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cics/error.hpp"
#include "cics/expression.hpp"
#include "cics/gallery.hpp"
#include "cics/integrator.hpp"
#include "test_systems.hpp"

using namespace cics;
using namespace cics::testing;

// ---- expressions -----------------------------------------------------------

TEST(Expression, PrecedenceAndUnaryMinus) {
  const Expression::Variables vars{{"x", 0}, {"u", 1}};
  const auto e = Expression::parse("-x + x^3 * 2 - u / 4", vars, false);
  EXPECT_DOUBLE_EQ(e.evaluate({2.0, 8.0}), -2.0 + 16.0 - 2.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-x^2", vars, false).evaluate({3.0, 0.0}), -9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + x)^-2", vars, false).evaluate({1.0, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(Expression::parse("2 - 3 - 4", vars, false).evaluate({0.0, 0.0}), -5.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e1", vars, false).evaluate({0.0, 0.0}), 15.0);
}

TEST(Expression, FunctionsOnlyWhenEnabled) {
  const Expression::Variables vars{{"t", 0}};
  EXPECT_NEAR(Expression::parse("exp(-t) + sin(t)^2 + cos(t)^2 + sqrt(t)", vars, true).evaluate({4.0}),
              std::exp(-4.0) + 1.0 + 2.0, 1e-15);
  EXPECT_THROW(Expression::parse("exp(t)", vars, false), Error);
}

TEST(Expression, MalformedInputIsAConfigError) {
  const Expression::Variables vars{{"x", 0}};
  for (const char* bad : {"", "x +", "(x", "x)", "y", "x ^ 1.5", "2 ** x", "x x"}) {
    try {
      Expression::parse(bad, vars, false);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::config) << bad;
    }
  }
}

TEST(Expression, SymbolicDerivativeMatchesFiniteDifference) {
  const Expression::Variables vars{{"x", 0}, {"u", 1}};
  const auto e = Expression::parse("-x + (1 + x^2) * u - x / (1 + u^2)", vars, false);
  const auto dx = e.derivative(0);
  const auto du = e.derivative(1);
  const double x = 0.7, u = -0.3, h = 1e-6;
  EXPECT_NEAR(dx.evaluate({x, u}), (e.evaluate({x + h, u}) - e.evaluate({x - h, u})) / (2 * h), 1e-7);
  EXPECT_NEAR(du.evaluate({x, u}), (e.evaluate({x, u + h}) - e.evaluate({x, u - h})) / (2 * h), 1e-7);
  EXPECT_TRUE(du.uses_variable(1));
  EXPECT_FALSE(Expression::parse("-x + (1 + x^2) * u", vars, false).derivative(1).uses_variable(1));
}

// ---- gallery ---------------------------------------------------------------

TEST(Gallery, ContainsRequiredEntriesAndAllHealthy) {
  std::set<std::string> names;
  for (const auto& e : load_gallery()) {
    names.insert(e.name);
    const EntryHealth h = check_entry(e);
    EXPECT_TRUE(h.ok) << h.problem;
    EXPECT_TRUE(e.sys.input_affine().has_value()) << e.name;
  }
  for (const char* n : {"linear-1d", "sontag-counterexample", "bistable-1d", "destabilizable-1d", "linear-2d"})
    EXPECT_TRUE(names.count(n)) << n;
}

TEST(Gallery, CounterexampleFieldVanishesAtUnitInput) {
  const SystemDef& sys = gallery_entry("sontag-counterexample").sys;
  EXPECT_EQ(eval_field(sys, scalar(2.0), scalar(1.0))[0], 0.0);
  EXPECT_TRUE(sys.input_set().contains(scalar(0.0)));
  EXPECT_TRUE(sys.input_set().contains(scalar(1.0)));
  EXPECT_FALSE(sys.input_set().contains(scalar(1.5)));
}

TEST(Gallery, BistableBasin) {
  const SystemDef& sys = gallery_entry("bistable-1d").sys;
  const Trajectory in = flow_autonomous(sys, scalar(0.5), 10.0);
  EXPECT_LT(std::abs(in.states().back()[0]), 1e-3);
  const Trajectory out = flow_autonomous(sys, scalar(1.5), 10.0);
  EXPECT_EQ(out.status(), TrajectoryStatus::blow_up);
}

TEST(Gallery, LinearDecay) {
  const SystemDef& sys = gallery_entry("linear-1d").sys;
  const Trajectory t = flow(sys, scalar(1.0), InputSignal::constant(scalar(0.0)), 1.0);
  EXPECT_NEAR(t.states().back()[0], std::exp(-1.0), 1e-6);
}

TEST(Gallery, UnknownNameIsAConfigError) {
  try {
    gallery_entry("no-such-system");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST(Gallery, HealthCheckRejectsWrongDescriptor) {
  GalleryEntry e = gallery_entry("bistable-1d");
  e.attraction = Region::box(scalar(-0.5), scalar(0.5), true);  // too small: 0.75 converges
  EXPECT_FALSE(check_entry(e).ok);
}

// ---- inline systems --------------------------------------------------------

TEST(Inline, ScalarFieldAndAffineDetection) {
  InlineSystem spec;
  spec.name = "inline-destab";
  spec.field = {"-x + (1 + x^2) * u"};
  const SystemDef sys = make_inline_system(spec);
  EXPECT_DOUBLE_EQ(eval_field(sys, scalar(2.0), scalar(0.5))[0], -2.0 + 5.0 * 0.5);
  ASSERT_TRUE(sys.input_affine().has_value());
  EXPECT_DOUBLE_EQ(sys.input_affine()->drift(scalar(2.0))[0], -2.0);
  EXPECT_DOUBLE_EQ(sys.input_affine()->gain(scalar(2.0))(0, 0), 5.0);
}

TEST(Inline, NonAffineFieldHasNoAffineForm) {
  InlineSystem spec;
  spec.field = {"-x + u^2"};
  EXPECT_FALSE(make_inline_system(spec).input_affine().has_value());
}

TEST(Inline, VectorFieldUsesIndexedVariables) {
  InlineSystem spec;
  spec.field = {"-0.5 * x1 + 2 * x2 + u1", "-2 * x1 - 0.5 * x2 + u2"};
  spec.input_dim = 2;
  spec.state_domain = Region::whole(2, true);
  spec.input_set = Region::whole(2, false);
  const SystemDef sys = make_inline_system(spec);
  const SystemDef ref = spiral_2d();
  const Vector x = vec({0.3, -1.2}), u = vec({0.1, 0.4});
  EXPECT_LT((eval_field(sys, x, u) - eval_field(ref, x, u)).norm(), 1e-15);
}

TEST(Inline, RejectsFunctionsAndBadEquilibrium) {
  InlineSystem fn;
  fn.field = {"-exp(x) + 1 + u"};
  EXPECT_THROW(make_inline_system(fn), Error);
  InlineSystem off;
  off.field = {"1 - x + u"};
  EXPECT_THROW(make_inline_system(off), Error);
}
