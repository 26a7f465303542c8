#pragma once

#include <cstdint>
#include <vector>

#include "cics/random.hpp"
#include "cics/types.hpp"

namespace cics {

/// Number of representative points drawn when a universal quantifier over a
/// compact set is discretized.
struct SampleBudget {
  int boundary = 64;
  int interior = 64;
};

/// A compact subset of the state space: closed ball, closed box or finite
/// point cloud.
class CompactSet {
 public:
  enum class Shape { ball, box, cloud };

  static CompactSet ball(Vector center, double radius, SampleBudget budget = {});
  static CompactSet box(Vector lo, Vector hi, SampleBudget budget = {});
  static CompactSet cloud(std::vector<Vector> points, SampleBudget budget = {});
  static CompactSet singleton(Vector point) { return cloud({std::move(point)}); }

  Shape shape() const { return shape_; }
  int dim() const { return dim_; }
  const SampleBudget& budget() const { return budget_; }
  CompactSet with_budget(SampleBudget budget) const;

  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  const std::vector<Vector>& points() const { return points_; }

  bool contains(const Vector& x, double tol = 0.0) const;
  /// Signed distance to the boundary: positive inside, negative outside.
  /// For clouds this is minus the distance to the nearest point.
  double boundary_distance(const Vector& x) const;
  /// Euclidean distance from x to the set (0 inside).
  double distance(const Vector& x) const;
  double diameter() const;
  /// Largest distance from `origin` to a point of the set.
  double max_distance_from(const Vector& origin) const;

  /// Deterministic representative points: boundary points first (vertices,
  /// axis points, then low-discrepancy points), then interior points (half
  /// Halton, half uniform random). Exact duplicates are removed.
  std::vector<Vector> sample(std::uint64_t seed) const { return sample(budget_, seed); }
  std::vector<Vector> sample(const SampleBudget& budget, std::uint64_t seed) const;
  /// Uniformly distributed point of the set.
  Vector random_point(Rng& rng) const;

 private:
  Shape shape_ = Shape::cloud;
  int dim_ = 0;
  SampleBudget budget_;
  Vector center_, lo_, hi_;
  double radius_ = 0.0;
  std::vector<Vector> points_;
};

}  // namespace cics
