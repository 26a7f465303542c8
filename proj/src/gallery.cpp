#include "cics/gallery.hpp"

#include <cmath>

#include "cics/error.hpp"
#include "cics/expression.hpp"
#include "cics/integrator.hpp"

namespace cics {

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

SystemDef::Spec scalar_spec(std::string name) {
  SystemDef::Spec s;
  s.name = std::move(name);
  s.dim = 1;
  s.input_dim = 1;
  s.state_domain = Region::whole(1, true);
  s.input_set = Region::whole(1, false);
  s.x_bar = scalar(0.0);
  s.u_bar = scalar(0.0);
  return s;
}

GalleryEntry linear_1d() {
  auto s = scalar_spec("linear-1d");
  s.field = [](const Vector& x, const Vector& u) { return scalar(-x[0] + u[0]); };
  s.input_affine = InputAffineForm{[](const Vector& x) { return scalar(-x[0]); },
                                   [](const Vector&) { return scalar_matrix(1.0); }};
  return {"linear-1d", SystemDef(std::move(s)), "xdot = -x + u", Region::whole(1, true), true,
          {"integrator oracle", "delta2", "stability", "uniform attraction", "cics convergence"}};
}

GalleryEntry counterexample() {
  auto s = scalar_spec("sontag-counterexample");
  s.input_set = Region::box(scalar(0.0), scalar(1.0), false);
  s.field = [](const Vector& x, const Vector& u) { return scalar((-1.0 + u[0]) * x[0]); };
  s.input_affine = InputAffineForm{[](const Vector& x) { return scalar(-x[0]); },
                                   [](const Vector& x) { return scalar_matrix(x[0]); }};
  return {"sontag-counterexample", SystemDef(std::move(s)), "xdot = (-1 + u) x, U = [0, 1]",
          Region::whole(1, true), true, {"stability part", "not-ISS demonstration"}};
}

GalleryEntry bistable_1d() {
  auto s = scalar_spec("bistable-1d");
  s.field = [](const Vector& x, const Vector& u) { return scalar(-x[0] + x[0] * x[0] * x[0] + u[0]); };
  s.input_affine = InputAffineForm{[](const Vector& x) { return scalar(-x[0] + x[0] * x[0] * x[0]); },
                                   [](const Vector&) { return scalar_matrix(1.0); }};
  return {"bistable-1d", SystemDef(std::move(s)), "xdot = -x + x^3 + u",
          Region::box(scalar(-1.0), scalar(1.0), true), false, {"delta1", "delta3 pipeline", "uniform attraction"}};
}

GalleryEntry destabilizable_1d() {
  auto s = scalar_spec("destabilizable-1d");
  s.field = [](const Vector& x, const Vector& u) { return scalar(-x[0] + (1.0 + x[0] * x[0]) * u[0]); };
  s.input_affine = InputAffineForm{[](const Vector& x) { return scalar(-x[0]); },
                                   [](const Vector& x) { return scalar_matrix(1.0 + x[0] * x[0]); }};
  return {"destabilizable-1d", SystemDef(std::move(s)), "xdot = -x + (1 + x^2) u", Region::whole(1, true), false,
          {"falsification"}};
}

GalleryEntry linear_2d() {
  SystemDef::Spec s;
  s.name = "linear-2d";
  s.dim = 2;
  s.input_dim = 2;
  s.state_domain = Region::whole(2, true);
  s.input_set = Region::whole(2, false);
  s.x_bar = Vector::Zero(2);
  s.u_bar = Vector::Zero(2);
  Matrix A(2, 2);
  A << -0.5, 2.0, -2.0, -0.5;
  s.field = [A](const Vector& x, const Vector& u) -> Vector { return A * x + u; };
  s.input_affine = InputAffineForm{[A](const Vector& x) -> Vector { return A * x; },
                                   [](const Vector&) -> Matrix { return Matrix::Identity(2, 2); }};
  return {"linear-2d", SystemDef(std::move(s)), "xdot = A x + u, A = [[-0.5, 2], [-2, -0.5]]",
          Region::whole(2, true), true, {"integrator oracle"}};
}

/// Distance from x_bar to the boundary of `r` along direction e (inf if none).
double reach_along(const Region& r, const Vector& origin, const Vector& e) {
  switch (r.kind()) {
    case Region::Kind::whole: return std::numeric_limits<double>::infinity();
    case Region::Kind::box: {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < e.size(); ++i) {
        if (e[i] > 0) best = std::min(best, (r.hi()[i] - origin[i]) / e[i]);
        if (e[i] < 0) best = std::min(best, (r.lo()[i] - origin[i]) / e[i]);
      }
      return best;
    }
    case Region::Kind::ball: {
      const Vector d = origin - r.center();
      const double b = d.dot(e);
      return -b + std::sqrt(b * b - d.squaredNorm() + r.radius() * r.radius());
    }
    case Region::Kind::set_union: return r.boundary_distance(origin);
  }
  return 0.0;
}

}  // namespace

EntryHealth check_entry(const GalleryEntry& entry) {
  const SystemDef& sys = entry.sys;
  EntryHealth h;
  auto bad = [&](std::string why) {
    h.ok = false;
    h.problem = entry.name + ": " + why;
    return h;
  };
  const Vector f0 = sys.raw_field(sys.x_bar(), sys.u_bar());
  if (!f0.allFinite() || f0.norm() > kEquilibriumTolerance) return bad("equilibrium residual too large");

  constexpr double kSettle = 40.0;
  constexpr double kNear = 1e-3;
  for (int i = 0; i < sys.dim(); ++i) {
    for (const double sign : {1.0, -1.0}) {
      Vector e = Vector::Zero(sys.dim());
      e[i] = sign;
      const double reach = reach_along(entry.attraction, sys.x_bar(), e);
      const double inner = std::isfinite(reach) ? 0.5 * reach : 1.0;
      const Vector xin = sys.x_bar() + inner * e;
      if (sys.state_domain().contains(xin)) {
        const Trajectory t = flow_autonomous(sys, xin, kSettle);
        if (t.status() != TrajectoryStatus::complete || sys.state_dist(t.states().back()) >= kNear)
          return bad("interior point of the attraction descriptor does not converge");
      }
      if (!std::isfinite(reach)) continue;
      const Vector xout = sys.x_bar() + 1.5 * reach * e;
      if (!sys.state_domain().contains(xout)) continue;
      const Trajectory t = flow_autonomous(sys, xout, kSettle);
      if (t.status() == TrajectoryStatus::complete && sys.state_dist(t.states().back()) < kNear)
        return bad("exterior point converges although the descriptor excludes it");
    }
  }
  return h;
}

const std::vector<GalleryEntry>& load_gallery() {
  static const std::vector<GalleryEntry> gallery = [] {
    std::vector<GalleryEntry> g;
    g.push_back(linear_1d());
    g.push_back(counterexample());
    g.push_back(bistable_1d());
    g.push_back(destabilizable_1d());
    g.push_back(linear_2d());
    return g;
  }();
  return gallery;
}

const GalleryEntry& gallery_entry(const std::string& name) {
  for (const auto& e : load_gallery()) {
    if (e.name != name) continue;
    const EntryHealth h = check_entry(e);
    if (!h.ok) fail(ErrorCode::config, "gallery entry failed its health check: " + h.problem);
    return e;
  }
  fail(ErrorCode::config, "unknown gallery system '" + name + "'");
}

SystemDef make_inline_system(const InlineSystem& spec) {
  const int n = static_cast<int>(spec.field.size());
  const int m = spec.input_dim;
  require(n > 0, ErrorCode::config, "inline system needs at least one field component");
  require(m > 0, ErrorCode::config, "inline system needs input_dim >= 1");
  Expression::Variables vars;
  for (int i = 0; i < n; ++i) vars["x" + std::to_string(i + 1)] = i;
  for (int j = 0; j < m; ++j) vars["u" + std::to_string(j + 1)] = n + j;
  if (n == 1) vars["x"] = 0;
  if (m == 1) vars["u"] = n;

  std::vector<Expression> f;
  for (const auto& text : spec.field) f.push_back(Expression::parse(text, vars, false));

  SystemDef::Spec s;
  s.name = spec.name;
  s.dim = n;
  s.input_dim = m;
  s.state_domain = spec.state_domain;
  s.input_set = spec.input_set;
  s.x_bar = spec.x_bar.size() ? spec.x_bar : Vector::Zero(n);
  s.u_bar = spec.u_bar.size() ? spec.u_bar : Vector::Zero(m);
  require(s.x_bar.size() == n && s.u_bar.size() == m, ErrorCode::config, "inline x_bar/u_bar dimension mismatch");

  auto pack = [n, m](const Vector& x, const Vector& u) {
    std::vector<double> v(static_cast<std::size_t>(n + m));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = x[i];
    for (int j = 0; j < m; ++j) v[static_cast<std::size_t>(n + j)] = u[j];
    return v;
  };
  s.field = [f, pack, n](const Vector& x, const Vector& u) {
    const auto v = pack(x, u);
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = f[static_cast<std::size_t>(i)].evaluate(v);
    return out;
  };

  std::vector<Expression> gain;
  bool affine = true;
  for (int i = 0; i < n && affine; ++i)
    for (int j = 0; j < m; ++j) {
      gain.push_back(f[static_cast<std::size_t>(i)].derivative(n + j));
      for (int k = 0; k < m; ++k) affine = affine && !gain.back().uses_variable(n + k);
    }
  if (affine) {
    const Vector ub = s.u_bar;
    InputAffineForm form;
    form.drift = [f, pack, ub, n](const Vector& x) {
      const auto v = pack(x, ub);
      Vector out(n);
      for (int i = 0; i < n; ++i) out[i] = f[static_cast<std::size_t>(i)].evaluate(v);
      return out;
    };
    form.gain = [gain, pack, ub, n, m](const Vector& x) {
      const auto v = pack(x, ub);
      Matrix g(n, m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = gain[static_cast<std::size_t>(i * m + j)].evaluate(v);
      return g;
    };
    s.input_affine = std::move(form);
  }
  return SystemDef(std::move(s));
}

}  // namespace cics
