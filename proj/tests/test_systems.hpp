#pragma once

// Small systems with known closed-form behaviour, built directly so the unit
// tests do not depend on the gallery.

#include <cmath>

#include "cics/system.hpp"

namespace cics::testing {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vector scalar(double x) { return vec({x}); }

inline SystemDef scalar_system(std::string name, std::function<double(double, double)> f,
                               Region input_set = Region::whole(1, false)) {
  SystemDef::Spec spec;
  spec.name = std::move(name);
  spec.dim = 1;
  spec.input_dim = 1;
  spec.field = [f](const Vector& x, const Vector& u) { return scalar(f(x[0], u[0])); };
  spec.state_domain = Region::whole(1, true);
  spec.input_set = std::move(input_set);
  spec.x_bar = scalar(0.0);
  spec.u_bar = scalar(0.0);
  return SystemDef(std::move(spec));
}

// xdot = -x + u
inline SystemDef linear_1d() {
  return scalar_system("linear-1d", [](double x, double u) { return -x + u; });
}

// xdot = (-1 + u) x on U = [0, 1]
inline SystemDef counterexample() {
  return scalar_system("sontag-counterexample", [](double x, double u) { return (-1.0 + u) * x; },
                       Region::box(scalar(0.0), scalar(1.0), false));
}

// xdot = -x + x^3 + u
inline SystemDef bistable() {
  return scalar_system("bistable-1d", [](double x, double u) { return -x + x * x * x + u; });
}

// xdot = x^2 + u (finite escape time 1/xi for u = 0)
inline SystemDef quadratic_blowup() {
  return scalar_system("quadratic", [](double x, double u) { return x * x + u; });
}

inline SystemDef zero_field() {
  return scalar_system("zero", [](double, double) { return 0.0; });
}

// xdot = A x + u with A = [[-0.5, 2], [-2, -0.5]]
inline SystemDef spiral_2d() {
  SystemDef::Spec spec;
  spec.name = "linear-2d";
  spec.dim = 2;
  spec.input_dim = 2;
  spec.field = [](const Vector& x, const Vector& u) {
    Vector dx(2);
    dx[0] = -0.5 * x[0] + 2.0 * x[1] + u[0];
    dx[1] = -2.0 * x[0] - 0.5 * x[1] + u[1];
    return dx;
  };
  spec.state_domain = Region::whole(2, true);
  spec.input_set = Region::whole(2, false);
  spec.x_bar = Vector::Zero(2);
  spec.u_bar = Vector::Zero(2);
  return SystemDef(std::move(spec));
}

}  // namespace cics::testing
