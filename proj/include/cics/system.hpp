#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "cics/compact_set.hpp"
#include "cics/region.hpp"
#include "cics/types.hpp"

namespace cics {

using VectorField = std::function<Vector(const Vector& x, const Vector& u)>;

/// Decomposition f(x, u) = drift(x) + gain(x) * (u - u_bar) + ... used by
/// input inversion. Only systems registered with this form can be falsified.
struct InputAffineForm {
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> gain;
};

/// A controlled system xdot = f(x, u) with state domain X (open), input set
/// U (closed) and an equilibrium pair f(x_bar, u_bar) = 0.
class SystemDef {
 public:
  struct Spec {
    std::string name;
    int dim = 0;
    int input_dim = 0;
    VectorField field;
    Region state_domain;
    Region input_set;
    Vector x_bar;
    Vector u_bar;
    std::optional<InputAffineForm> input_affine;
  };

  /// Throws precondition / domain-violation errors when the equilibrium pair
  /// is inconsistent with the domains or |f(x_bar, u_bar)| > 1e-12.
  explicit SystemDef(Spec spec);

  const std::string& name() const { return spec_.name; }
  int dim() const { return spec_.dim; }
  int input_dim() const { return spec_.input_dim; }
  const Region& state_domain() const { return spec_.state_domain; }
  const Region& input_set() const { return spec_.input_set; }
  const Vector& x_bar() const { return spec_.x_bar; }
  const Vector& u_bar() const { return spec_.u_bar; }
  const std::optional<InputAffineForm>& input_affine() const { return spec_.input_affine; }

  /// Raw field evaluation without domain checks (integrator stages).
  Vector raw_field(const Vector& x, const Vector& u) const { return spec_.field(x, u); }

  double state_dist(const Vector& x) const { return (x - spec_.x_bar).norm(); }
  double input_dist(const Vector& u) const { return (u - spec_.u_bar).norm(); }

 private:
  Spec spec_;
};

inline constexpr double kEquilibriumTolerance = 1e-12;

/// f(x, u) with domain and finiteness checks.
Vector eval_field(const SystemDef& sys, const Vector& x, const Vector& u);

struct LipschitzOptions {
  int triples = 10000;
  std::uint64_t seed = 0;
  double min_separation = 1e-6;
};

/// Sampled lower bound on the Lipschitz constant of f in x over region x inputs.
struct LipschitzEstimate {
  double value = 0.0;
  int triples_used = 0;
  bool is_lower_bound = true;
};

LipschitzEstimate estimate_lipschitz(const SystemDef& sys, const CompactSet& region,
                                     const CompactSet& inputs, const LipschitzOptions& options = {});

}  // namespace cics
