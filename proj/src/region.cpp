#include "cics/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cics/error.hpp"

namespace cics {

Region Region::whole(int dim, bool open) {
  Region r;
  r.kind_ = Kind::whole;
  r.dim_ = dim;
  r.open_ = open;
  return r;
}

Region Region::box(Vector lo, Vector hi, bool open) {
  require(lo.size() == hi.size(), ErrorCode::precondition, "box bounds differ in dimension");
  require((lo.array() <= hi.array()).all(), ErrorCode::precondition, "box requires lo <= hi");
  Region r;
  r.kind_ = Kind::box;
  r.dim_ = static_cast<int>(lo.size());
  r.open_ = open;
  r.lo_ = std::move(lo);
  r.hi_ = std::move(hi);
  return r;
}

Region Region::ball(Vector center, double radius, bool open) {
  require(radius >= 0.0, ErrorCode::precondition, "ball radius must be nonnegative");
  Region r;
  r.kind_ = Kind::ball;
  r.dim_ = static_cast<int>(center.size());
  r.open_ = open;
  r.center_ = std::move(center);
  r.radius_ = radius;
  return r;
}

Region Region::set_union(std::vector<Region> parts) {
  require(!parts.empty(), ErrorCode::precondition, "union needs at least one part");
  Region r;
  r.kind_ = Kind::set_union;
  r.dim_ = parts.front().dim();
  r.open_ = parts.front().is_open();
  for (const auto& p : parts) {
    require(p.dim() == r.dim_, ErrorCode::precondition, "union parts differ in dimension");
    require(p.kind() != Kind::set_union, ErrorCode::precondition, "nested unions are not supported");
  }
  r.parts_ = std::move(parts);
  return r;
}

bool Region::bounded() const {
  switch (kind_) {
    case Kind::whole: return false;
    case Kind::box: return lo_.allFinite() && hi_.allFinite();
    case Kind::ball: return std::isfinite(radius_);
    case Kind::set_union:
      return std::all_of(parts_.begin(), parts_.end(), [](const Region& p) { return p.bounded(); });
  }
  return false;
}

bool Region::contains(const Vector& x) const {
  if (x.size() != dim_ || !x.allFinite()) return false;
  switch (kind_) {
    case Kind::whole: return true;
    case Kind::box:
      if (open_) return (x.array() > lo_.array()).all() && (x.array() < hi_.array()).all();
      return (x.array() >= lo_.array()).all() && (x.array() <= hi_.array()).all();
    case Kind::ball: {
      const double d = (x - center_).norm();
      return open_ ? d < radius_ : d <= radius_;
    }
    case Kind::set_union:
      return std::any_of(parts_.begin(), parts_.end(), [&](const Region& p) { return p.contains(x); });
  }
  return false;
}

double Region::boundary_distance(const Vector& x) const {
  if (!contains(x)) return 0.0;
  switch (kind_) {
    case Kind::whole: return std::numeric_limits<double>::infinity();
    case Kind::box:
      return std::min((x - lo_).minCoeff(), (hi_ - x).minCoeff());
    case Kind::ball: return radius_ - (x - center_).norm();
    case Kind::set_union: {
      // Lower bound: the largest clearance inside a single part.
      double best = 0.0;
      for (const auto& p : parts_) best = std::max(best, p.boundary_distance(x));
      return best;
    }
  }
  return 0.0;
}

Vector Region::project(const Vector& x) const {
  switch (kind_) {
    case Kind::whole: return x;
    case Kind::box: return x.cwiseMax(lo_).cwiseMin(hi_);
    case Kind::ball: {
      const Vector d = x - center_;
      const double n = d.norm();
      if (n <= radius_) return x;
      return center_ + d * (radius_ / n);
    }
    case Kind::set_union: {
      Vector best = parts_.front().project(x);
      double best_d = (best - x).norm();
      for (std::size_t i = 1; i < parts_.size(); ++i) {
        Vector p = parts_[i].project(x);
        const double d = (p - x).norm();
        if (d < best_d) {
          best_d = d;
          best = std::move(p);
        }
      }
      return best;
    }
  }
  return x;
}

}  // namespace cics
