#pragma once

#include <vector>

#include "cics/types.hpp"

namespace cics {

/// Region descriptor used for the state domain (open) and the input set
/// (closed). Balls are Euclidean; a union is a list of boxes and balls.
class Region {
 public:
  enum class Kind { whole, box, ball, set_union };

  static Region whole(int dim, bool open);
  static Region box(Vector lo, Vector hi, bool open);
  static Region ball(Vector center, double radius, bool open);
  static Region set_union(std::vector<Region> parts);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_open() const { return open_; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<Region>& parts() const { return parts_; }
  bool bounded() const;

  bool contains(const Vector& x) const;
  /// Distance from an interior point to the complement; +inf for the whole
  /// space and 0 for points outside.
  double boundary_distance(const Vector& x) const;
  /// Nearest point of the (closed) region. For unions, the nearest projection
  /// over all parts.
  Vector project(const Vector& x) const;

 private:
  Kind kind_ = Kind::whole;
  int dim_ = 0;
  bool open_ = false;
  Vector lo_, hi_, center_;
  double radius_ = 0.0;
  std::vector<Region> parts_;
};

}  // namespace cics
