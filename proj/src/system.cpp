#include "cics/system.hpp"

#include <algorithm>

#include "cics/error.hpp"
#include "cics/random.hpp"

namespace cics {

SystemDef::SystemDef(Spec spec) : spec_(std::move(spec)) {
  require(spec_.dim > 0, ErrorCode::precondition, "state dimension must be positive");
  require(spec_.input_dim >= 0, ErrorCode::precondition, "input dimension must be nonnegative");
  require(static_cast<bool>(spec_.field), ErrorCode::precondition, "system needs a vector field");
  require(spec_.x_bar.size() == spec_.dim, ErrorCode::precondition, "x_bar has the wrong dimension");
  require(spec_.u_bar.size() == spec_.input_dim, ErrorCode::precondition, "u_bar has the wrong dimension");
  require(spec_.state_domain.dim() == spec_.dim, ErrorCode::precondition,
          "state domain has the wrong dimension");
  require(spec_.input_set.dim() == spec_.input_dim, ErrorCode::precondition,
          "input set has the wrong dimension");
  require(spec_.state_domain.contains(spec_.x_bar) && spec_.state_domain.boundary_distance(spec_.x_bar) > 0.0,
          ErrorCode::domain_violation, "x_bar must lie strictly inside the state domain");
  require(spec_.input_set.contains(spec_.u_bar), ErrorCode::domain_violation,
          "u_bar must lie in the input set");
  const Vector f0 = spec_.field(spec_.x_bar, spec_.u_bar);
  require(f0.size() == spec_.dim && f0.allFinite(), ErrorCode::non_finite,
          "field at the equilibrium is not a finite vector of the state dimension");
  require(f0.norm() <= kEquilibriumTolerance, ErrorCode::precondition,
          "equilibrium residual |f(x_bar, u_bar)| exceeds 1e-12 for system '" + spec_.name + "'");
}

Vector eval_field(const SystemDef& sys, const Vector& x, const Vector& u) {
  require(x.size() == sys.dim() && u.size() == sys.input_dim(), ErrorCode::precondition,
          "state or input has the wrong dimension");
  require(sys.state_domain().contains(x), ErrorCode::domain_violation, "state lies outside the state domain");
  require(sys.input_set().contains(u), ErrorCode::domain_violation, "input lies outside the input set");
  Vector dx = sys.raw_field(x, u);
  require(dx.size() == sys.dim() && dx.allFinite(), ErrorCode::non_finite, "field returned a non-finite value");
  return dx;
}

LipschitzEstimate estimate_lipschitz(const SystemDef& sys, const CompactSet& region,
                                     const CompactSet& inputs, const LipschitzOptions& options) {
  require(region.dim() == sys.dim(), ErrorCode::precondition, "region has the wrong dimension");
  require(sys.input_dim() == 0 || inputs.dim() == sys.input_dim(), ErrorCode::precondition,
          "input region has the wrong dimension");
  if (region.diameter() <= options.min_separation) {
    fail(ErrorCode::degenerate_region, "Lipschitz estimation needs a region of positive diameter");
  }

  const auto x_pool = region.sample(SampleBudget{64, 64}, options.seed);
  std::vector<Vector> u_pool;
  if (sys.input_dim() > 0) u_pool = inputs.sample(SampleBudget{64, 64}, mix_seed(options.seed, 1));
  for (const auto& x : x_pool)
    require(sys.state_domain().contains(x), ErrorCode::domain_violation, "region leaves the state domain");
  for (const auto& u : u_pool)
    require(sys.input_set().contains(u), ErrorCode::domain_violation, "input region leaves the input set");

  Rng rng = make_rng(options.seed, 2);
  auto pick = [&](const std::vector<Vector>& pool) {
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size()));
    return pool[std::min(i, pool.size() - 1)];
  };

  LipschitzEstimate est;
  const Vector no_input(0);
  for (int k = 0; k < options.triples; ++k) {
    // Alternate pooled (boundary-heavy) and fresh uniform draws.
    const Vector x = (k % 2 == 0) ? pick(x_pool) : region.random_point(rng);
    const Vector z = (k % 4 < 2) ? region.random_point(rng) : pick(x_pool);
    const Vector u = sys.input_dim() == 0 ? no_input : ((k % 3 == 0) ? pick(u_pool) : inputs.random_point(rng));
    const double sep = (x - z).norm();
    if (sep < options.min_separation) continue;
    if (!sys.state_domain().contains(x) || !sys.state_domain().contains(z) || !sys.input_set().contains(u)) continue;
    const double ratio = (eval_field(sys, x, u) - eval_field(sys, z, u)).norm() / sep;
    est.value = std::max(est.value, ratio);
    ++est.triples_used;
  }
  return est;
}

}  // namespace cics
