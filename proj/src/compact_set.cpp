#include "cics/compact_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cics/error.hpp"

namespace cics {

double standard_normal(Rng& rng) {
  // Box-Muller on our own uniform draws keeps streams reproducible.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int nth_prime(int n) {
  static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                   43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  require(n >= 0 && n < static_cast<int>(std::size(primes)), ErrorCode::precondition,
          "Halton sequences support at most 25 dimensions");
  return primes[n];
}

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

namespace {

Vector halton_point(std::uint64_t index, int dim) {
  Vector p(dim);
  for (int i = 0; i < dim; ++i) p[i] = radical_inverse(index, nth_prime(i));
  return p;
}

Vector random_direction(Rng& rng, int dim) {
  Vector d(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (int i = 0; i < dim; ++i) d[i] = standard_normal(rng);
    n = d.norm();
  }
  return d / n;
}

void push_unique(std::vector<Vector>& out, Vector p) {
  for (const auto& q : out) {
    if (q == p) return;
  }
  out.push_back(std::move(p));
}

}  // namespace

CompactSet CompactSet::ball(Vector center, double radius, SampleBudget budget) {
  require(radius >= 0.0 && std::isfinite(radius), ErrorCode::precondition,
          "compact ball needs a finite nonnegative radius");
  require(center.size() > 0 && center.allFinite(), ErrorCode::precondition,
          "compact ball needs a finite center");
  CompactSet s;
  s.shape_ = Shape::ball;
  s.dim_ = static_cast<int>(center.size());
  s.budget_ = budget;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

CompactSet CompactSet::box(Vector lo, Vector hi, SampleBudget budget) {
  require(lo.size() == hi.size() && lo.size() > 0, ErrorCode::precondition,
          "compact box bounds differ in dimension");
  require(lo.allFinite() && hi.allFinite() && (lo.array() <= hi.array()).all(),
          ErrorCode::precondition, "compact box needs finite bounds with lo <= hi");
  CompactSet s;
  s.shape_ = Shape::box;
  s.dim_ = static_cast<int>(lo.size());
  s.budget_ = budget;
  s.center_ = 0.5 * (lo + hi);
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

CompactSet CompactSet::cloud(std::vector<Vector> points, SampleBudget budget) {
  require(!points.empty(), ErrorCode::precondition, "point cloud must be nonempty");
  const auto dim = points.front().size();
  for (const auto& p : points) {
    require(p.size() == dim && p.allFinite(), ErrorCode::precondition,
            "point cloud entries must be finite and share a dimension");
  }
  CompactSet s;
  s.shape_ = Shape::cloud;
  s.dim_ = static_cast<int>(dim);
  s.budget_ = budget;
  s.points_ = std::move(points);
  return s;
}

CompactSet CompactSet::with_budget(SampleBudget budget) const {
  CompactSet s = *this;
  s.budget_ = budget;
  return s;
}

bool CompactSet::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) return false;
  return boundary_distance(x) >= -tol;
}

double CompactSet::boundary_distance(const Vector& x) const {
  switch (shape_) {
    case Shape::ball: return radius_ - (x - center_).norm();
    case Shape::box: {
      const double inside = std::min((x - lo_).minCoeff(), (hi_ - x).minCoeff());
      if (inside >= 0.0) return inside;
      return -(x - x.cwiseMax(lo_).cwiseMin(hi_)).norm();
    }
    case Shape::cloud: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : points_) best = std::min(best, (x - p).norm());
      return -best;
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double CompactSet::distance(const Vector& x) const {
  return std::max(0.0, -boundary_distance(x));
}

double CompactSet::diameter() const {
  switch (shape_) {
    case Shape::ball: return 2.0 * radius_;
    case Shape::box: return (hi_ - lo_).norm();
    case Shape::cloud: {
      double d = 0.0;
      for (std::size_t i = 0; i < points_.size(); ++i)
        for (std::size_t j = i + 1; j < points_.size(); ++j)
          d = std::max(d, (points_[i] - points_[j]).norm());
      return d;
    }
  }
  return 0.0;
}

double CompactSet::max_distance_from(const Vector& origin) const {
  switch (shape_) {
    case Shape::ball: return (center_ - origin).norm() + radius_;
    case Shape::box: {
      // Farthest vertex, coordinate-wise.
      const Vector far = (lo_ - origin).cwiseAbs().cwiseMax((hi_ - origin).cwiseAbs());
      return far.norm();
    }
    case Shape::cloud: {
      double d = 0.0;
      for (const auto& p : points_) d = std::max(d, (p - origin).norm());
      return d;
    }
  }
  return 0.0;
}

Vector CompactSet::random_point(Rng& rng) const {
  switch (shape_) {
    case Shape::ball: {
      if (radius_ == 0.0) return center_;
      const Vector dir = random_direction(rng, dim_);
      const double r = radius_ * std::pow(uniform01(rng), 1.0 / dim_);
      return center_ + r * dir;
    }
    case Shape::box: {
      Vector p(dim_);
      for (int i = 0; i < dim_; ++i) p[i] = lo_[i] + (hi_[i] - lo_[i]) * uniform01(rng);
      return p;
    }
    case Shape::cloud: {
      const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(points_.size()));
      return points_[std::min(idx, points_.size() - 1)];
    }
  }
  return Vector();
}

std::vector<Vector> CompactSet::sample(const SampleBudget& budget, std::uint64_t seed) const {
  std::vector<Vector> out;
  Rng rng = make_rng(seed, 0x5A3D);
  const int nb = std::max(0, budget.boundary);
  const int ni = std::max(0, budget.interior);

  switch (shape_) {
    case Shape::cloud: {
      const std::size_t total = static_cast<std::size_t>(std::max(1, nb + ni));
      if (points_.size() <= total) {
        for (const auto& p : points_) push_unique(out, p);
      } else {
        const double stride = static_cast<double>(points_.size()) / static_cast<double>(total);
        for (std::size_t k = 0; k < total; ++k)
          push_unique(out, points_[static_cast<std::size_t>(k * stride)]);
      }
      return out;
    }
    case Shape::box: {
      // Vertices first.
      const int n_vertices = dim_ < 20 ? (1 << dim_) : nb;
      for (int v = 0; v < std::min(n_vertices, nb); ++v) {
        Vector p(dim_);
        for (int i = 0; i < dim_; ++i) p[i] = ((v >> i) & 1) ? hi_[i] : lo_[i];
        push_unique(out, std::move(p));
      }
      // Face points from a Halton sequence with one coordinate pinned.
      if (dim_ > 1) {
        for (int k = 0; static_cast<int>(out.size()) < nb && k < 4 * nb; ++k) {
          Vector p = lo_ + (hi_ - lo_).cwiseProduct(halton_point(static_cast<std::uint64_t>(k + 1), dim_));
          const int axis = k % dim_;
          p[axis] = ((k / dim_) % 2) ? hi_[axis] : lo_[axis];
          push_unique(out, std::move(p));
        }
      }
      push_unique(out, center_);
      for (int k = 0; k < ni / 2; ++k)
        push_unique(out, lo_ + (hi_ - lo_).cwiseProduct(halton_point(static_cast<std::uint64_t>(k + 1), dim_)));
      for (int k = ni / 2; k < ni; ++k) push_unique(out, random_point(rng));
      return out;
    }
    case Shape::ball: {
      if (radius_ == 0.0) {
        out.push_back(center_);
        return out;
      }
      for (int i = 0; i < dim_ && static_cast<int>(out.size()) < nb; ++i) {
        Vector e = Vector::Zero(dim_);
        e[i] = radius_;
        push_unique(out, center_ + e);
        if (static_cast<int>(out.size()) < nb) push_unique(out, center_ - e);
      }
      if (dim_ == 2) {
        for (int k = 0; static_cast<int>(out.size()) < nb; ++k) {
          const double a = 2.0 * std::numbers::pi * radical_inverse(static_cast<std::uint64_t>(k + 1), 2);
          Vector d(2);
          d << std::cos(a), std::sin(a);
          push_unique(out, center_ + radius_ * d);
          if (k > 4 * nb) break;
        }
      } else if (dim_ > 2) {
        while (static_cast<int>(out.size()) < nb) push_unique(out, center_ + radius_ * random_direction(rng, dim_));
      }
      push_unique(out, center_);
      int added = 0;
      for (std::uint64_t k = 1; added < ni / 2 && k < static_cast<std::uint64_t>(64 * (ni + 1)); ++k) {
        const Vector q = 2.0 * halton_point(k, dim_) - Vector::Ones(dim_);
        if (q.norm() <= 1.0) {
          push_unique(out, center_ + radius_ * q);
          ++added;
        }
      }
      for (int k = ni / 2; k < ni; ++k) push_unique(out, random_point(rng));
      return out;
    }
  }
  return out;
}

}  // namespace cics
