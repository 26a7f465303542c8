#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cics/region.hpp"
#include "cics/system.hpp"

namespace cics {

struct GalleryEntry {
  std::string name;
  SystemDef sys;
  std::string description;
  /// Claimed domain of attraction of x_bar under u = u_bar.
  Region attraction;
  bool analytic_solution = false;
  std::vector<std::string> backs;  // examples this entry supports
};

/// Outcome of the load-time health checks for one entry.
struct EntryHealth {
  bool ok = true;
  std::string problem;
};

/// Equilibrium residual plus spot integration of the attraction descriptor:
/// interior points must converge; when the descriptor is bounded, points
/// outside it must not.
EntryHealth check_entry(const GalleryEntry& entry);

/// All built-in systems. Every entry passes check_entry.
const std::vector<GalleryEntry>& load_gallery();

/// Gallery lookup; throws a config error for unknown names or entries that
/// fail their health check.
const GalleryEntry& gallery_entry(const std::string& name);

/// Declarative system built from the expression grammar. Variables are x (or
/// x1..xn) and u (or u1..um). Input-affine structure is detected
/// symbolically when every du-derivative is free of u.
struct InlineSystem {
  std::string name = "inline";
  std::vector<std::string> field;
  int input_dim = 1;
  Region state_domain = Region::whole(1, true);
  Region input_set = Region::whole(1, false);
  Vector x_bar;
  Vector u_bar;
};

SystemDef make_inline_system(const InlineSystem& spec);

}  // namespace cics
