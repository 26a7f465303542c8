#pragma once

#include <string>

#include <json.hpp>

#include "cics/certifier.hpp"
#include "cics/compact_set.hpp"
#include "cics/estimators.hpp"
#include "cics/integrator.hpp"
#include "cics/region.hpp"

namespace cics {

using Json = nlohmann::json;

/// Non-finite doubles become null (JSON has no infinity).
Json number_json(double v);
Json vector_json(const Vector& v);

Json to_json(const Region& r);
Json to_json(const CompactSet& k);
Json to_json(const Tolerances& tol);
Json to_json(const Validation& v);
Json to_json(const Certificate& c);
/// Trajectory metadata (status, sigma_est, tolerances, node count, final
/// state); node data goes to CSV.
Json to_json(const Trajectory& t);
Json to_json(const RecurrenceReport& r);
Json to_json(const CicsVerdict& v);
Json to_json(const FalsifyResult& r);
Json to_json(const NotIssReport& r);

/// Shortest round-trip decimal representation, as used in every CSV.
std::string format_double(double v);

/// t, x_1..x_n, u_1..u_m at every stored node.
std::string trajectory_csv(const Trajectory& traj, int input_dim);
/// condition, trial, time, observed, bound, input, xi_1..xi_n.
std::string violations_csv(const Certificate& c, int dim);
/// Depth-first certificate table: path, kind, eps, value, time, trials, violations.
std::string certificate_csv(const Certificate& c);
/// t, dist_x, tail_norm, marker, eps on a uniform grid plus marker rows for
/// T1, T2 and T_conv of every ladder level.
std::string cics_csv(const SystemDef& sys, const CicsVerdict& v, int rows = 501, const NormOptions& norms = {});
/// t, x_1..x_n, p_1..p_n, u_1..u_m on a uniform grid.
std::string falsify_csv(const FalsifyResult& r, int rows = 501);

}  // namespace cics
