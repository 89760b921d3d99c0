#pragma once

// Analytic primitives shared by the depth renderer, collision checks,
// obstacle placement, and safety-margin metrics.
//
// Local frames: a cuboid is centered with full sizes `dims` along its axes;
// a cylinder has radius dims.x() and length dims.y() along its local z axis;
// a sphere has radius dims.x().

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "racesim/dynamics.hpp"
#include "racesim/errors.hpp"
#include "racesim/math.hpp"

namespace racesim {

enum class ShapeKind { kCuboid, kCylinder, kSphere };

// What placed an obstacle. Bars belong to gates and are not counted as
// obstacles in metrics.
enum class ObstacleCategory { kWall, kTree, kOrbit, kBar, kCustom };

inline const char* to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kCuboid: return "cuboid";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kSphere: return "sphere";
  }
  return "?";
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "cuboid") return ShapeKind::kCuboid;
  if (s == "cylinder") return ShapeKind::kCylinder;
  if (s == "sphere") return ShapeKind::kSphere;
  throw ParseError("unknown obstacle kind: " + s);
}

inline const char* to_string(ObstacleCategory c) {
  switch (c) {
    case ObstacleCategory::kWall: return "wall";
    case ObstacleCategory::kTree: return "tree";
    case ObstacleCategory::kOrbit: return "orbit";
    case ObstacleCategory::kBar: return "bar";
    case ObstacleCategory::kCustom: return "custom";
  }
  return "?";
}

inline ObstacleCategory obstacle_category_from_string(const std::string& s) {
  if (s == "wall") return ObstacleCategory::kWall;
  if (s == "tree") return ObstacleCategory::kTree;
  if (s == "orbit") return ObstacleCategory::kOrbit;
  if (s == "bar") return ObstacleCategory::kBar;
  if (s == "custom") return ObstacleCategory::kCustom;
  throw ParseError("unknown obstacle category: " + s);
}

struct Obstacle {
  ShapeKind kind = ShapeKind::kCuboid;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 dims = Vec3::Ones();
  ObstacleCategory category = ObstacleCategory::kCustom;
  int group = 0;  // primitives of one composite obstacle share a group id

  static Obstacle cuboid(const Vec3& c, const Quat& q, const Vec3& size) {
    return {ShapeKind::kCuboid, c, q, size};
  }
  static Obstacle cylinder(const Vec3& c, const Quat& q, double radius, double length) {
    return {ShapeKind::kCylinder, c, q, Vec3(radius, length, 0.0)};
  }
  static Obstacle sphere(const Vec3& c, double radius) {
    return {ShapeKind::kSphere, c, Quat::Identity(), Vec3(radius, 0.0, 0.0)};
  }

  Vec3 to_local(const Vec3& p) const { return orientation.conjugate() * (p - position); }

  double bounding_radius() const {
    switch (kind) {
      case ShapeKind::kCuboid: return 0.5 * dims.norm();
      case ShapeKind::kCylinder: return std::hypot(dims.x(), 0.5 * dims.y());
      case ShapeKind::kSphere: return dims.x();
    }
    return 0.0;
  }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed contact convention: shapes touching within this tolerance overlap.
inline constexpr double kContactTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Ray casting. Returns the nearest t >= 0 along origin + t * dir (dir need
// not be unit; distances scale with |dir|). An origin inside the shape hits
// at t = 0.

namespace detail {

// Slab clip of [t0, t1] against lo <= o + t d <= hi on one axis.
inline bool clip_slab(double o, double d, double lo, double hi, double& t0, double& t1) {
  if (d == 0.0) return o >= lo && o <= hi;
  double a = (lo - o) / d;
  double b = (hi - o) / d;
  if (a > b) std::swap(a, b);
  t0 = std::max(t0, a);
  t1 = std::min(t1, b);
  return t0 <= t1;
}

inline std::optional<double> finish(double t0, double t1) {
  if (t1 < 0.0 || t0 > t1) return std::nullopt;
  return std::max(t0, 0.0);
}

}  // namespace detail

inline std::optional<double> ray_cast(const Obstacle& ob, const Vec3& origin, const Vec3& dir) {
  const Vec3 o = ob.to_local(origin);
  const Vec3 d = ob.orientation.conjugate() * dir;
  double t0 = -kInf, t1 = kInf;
  switch (ob.kind) {
    case ShapeKind::kCuboid: {
      const Vec3 h = 0.5 * ob.dims;
      for (int i = 0; i < 3; ++i)
        if (!detail::clip_slab(o[i], d[i], -h[i], h[i], t0, t1)) return std::nullopt;
      return detail::finish(t0, t1);
    }
    case ShapeKind::kSphere: {
      const double r = ob.dims.x();
      const double a = d.squaredNorm();
      const double b = o.dot(d);
      const double c = o.squaredNorm() - r * r;
      const double disc = b * b - a * c;
      if (a == 0.0 || disc < 0.0) return std::nullopt;
      const double sq = std::sqrt(disc);
      // Numerically stable roots.
      const double qv = -(b + std::copysign(sq, b));
      double r0 = qv / a, r1 = (qv != 0.0) ? c / qv : r0;
      if (r0 > r1) std::swap(r0, r1);
      return detail::finish(r0, r1);
    }
    case ShapeKind::kCylinder: {
      const double r = ob.dims.x();
      const double hl = 0.5 * ob.dims.y();
      if (!detail::clip_slab(o.z(), d.z(), -hl, hl, t0, t1)) return std::nullopt;
      const double a = d.x() * d.x() + d.y() * d.y();
      const double b = o.x() * d.x() + o.y() * d.y();
      const double c = o.x() * o.x() + o.y() * o.y() - r * r;
      if (a == 0.0) {
        if (c > 0.0) return std::nullopt;
      } else {
        const double disc = b * b - a * c;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        const double qv = -(b + std::copysign(sq, b));
        double r0 = qv / a, r1 = (qv != 0.0) ? c / qv : r0;
        if (r0 > r1) std::swap(r0, r1);
        t0 = std::max(t0, r0);
        t1 = std::min(t1, r1);
      }
      return detail::finish(t0, t1);
    }
  }
  return std::nullopt;
}

// Distance from a point inside `b` to the box boundary along dir.
inline std::optional<double> ray_exit_bounds(const Vec3& lo, const Vec3& hi, const Vec3& origin, const Vec3& dir) {
  double t_exit = kInf;
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 0.0) t_exit = std::min(t_exit, (hi[i] - origin[i]) / dir[i]);
    else if (dir[i] < 0.0) t_exit = std::min(t_exit, (lo[i] - origin[i]) / dir[i]);
  }
  if (!std::isfinite(t_exit)) return std::nullopt;
  return std::max(t_exit, 0.0);
}

// ---------------------------------------------------------------------------
// Point distance (0 inside).

inline double point_distance(const Obstacle& ob, const Vec3& p) {
  const Vec3 q = ob.to_local(p);
  switch (ob.kind) {
    case ShapeKind::kCuboid:
      return (q.cwiseAbs() - 0.5 * ob.dims).cwiseMax(0.0).norm();
    case ShapeKind::kSphere:
      return std::max(q.norm() - ob.dims.x(), 0.0);
    case ShapeKind::kCylinder: {
      const double dr = std::hypot(q.x(), q.y()) - ob.dims.x();
      const double da = std::abs(q.z()) - 0.5 * ob.dims.y();
      return std::hypot(std::max(dr, 0.0), std::max(da, 0.0));
    }
  }
  return kInf;
}

// ---------------------------------------------------------------------------
// Oriented box overlap tests.

namespace detail {

inline bool obb_obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Mat3 rel = a.rot.transpose() * b.rot;  // b axes in a's frame
  const Vec3 t = a.rot.transpose() * (b.center - a.center);
  const Mat3 abs_rel = rel.cwiseAbs();
  constexpr double eps = 1e-12;
  const Vec3& ha = a.half;
  const Vec3& hb = b.half;
  for (int i = 0; i < 3; ++i) {
    const double ra = ha[i];
    const double rb = hb.dot(abs_rel.row(i));
    if (std::abs(t[i]) > ra + rb + kContactTolerance) return false;
  }
  for (int j = 0; j < 3; ++j) {
    const double ra = ha.dot(abs_rel.col(j));
    const double rb = hb[j];
    if (std::abs(t.dot(rel.col(j))) > ra + rb + kContactTolerance) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // Axis a_i x b_j expressed in a's frame.
      const Vec3 axis = Vec3::Unit(i).cross(Vec3(rel.col(j)));
      const double n = axis.norm();
      if (n < eps) continue;  // parallel edges: covered by face axes
      const Vec3 ax = axis / n;
      const double ra = ha.dot(ax.cwiseAbs());
      const double rb = hb.dot((rel.transpose() * ax).cwiseAbs());
      if (std::abs(t.dot(ax)) > ra + rb + kContactTolerance) return false;
    }
  }
  return true;
}

inline double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; returns counter-clockwise hull without repeats.
inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double segment_origin_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? std::clamp(-a.dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab).norm();
}

// Distance from the 2D origin to a convex polygon (0 when inside).
inline double polygon_origin_distance(const std::vector<Eigen::Vector2d>& hull) {
  if (hull.empty()) return kInf;
  if (hull.size() == 1) return hull[0].norm();
  if (hull.size() == 2) return segment_origin_distance(hull[0], hull[1]);
  const Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  bool inside = true;
  double best = kInf;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if (cross2(a, b, origin) < 0) inside = false;
    best = std::min(best, segment_origin_distance(a, b));
  }
  return inside ? 0.0 : best;
}

// Box vs finite cylinder: clip the box to the cylinder's axial slab, project
// the clipped polytope onto the cross-section plane, and compare the
// distance from the axis to that convex polygon with the radius.
inline bool obb_cylinder_overlap(const OrientedBox& box, const Obstacle& cyl) {
  const double r = cyl.dims.x();
  const double hl = 0.5 * cyl.dims.y();
  std::array<Vec3, 8> c;
  const auto world = box.corners();
  for (std::size_t i = 0; i < 8; ++i) c[i] = cyl.to_local(world[i]);
  const double zlo = -hl - kContactTolerance, zhi = hl + kContactTolerance;
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(32);
  for (const Vec3& p : c)
    if (p.z() >= zlo && p.z() <= zhi) pts.emplace_back(p.x(), p.y());
  // Box edges connect corners differing in exactly one index bit.
  for (int i = 0; i < 8; ++i) {
    for (int bit = 1; bit < 8; bit <<= 1) {
      const int j = i | bit;
      if (j == i) continue;
      const Vec3& a = c[static_cast<std::size_t>(i)];
      const Vec3& b = c[static_cast<std::size_t>(j)];
      for (double plane : {zlo, zhi}) {
        const double da = a.z() - plane, db = b.z() - plane;
        if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
          const double t = da / (da - db);
          const Vec3 x = a + t * (b - a);
          pts.emplace_back(x.x(), x.y());
        }
      }
    }
  }
  if (pts.empty()) return false;
  return polygon_origin_distance(convex_hull(std::move(pts))) <= r + kContactTolerance;
}

}  // namespace detail

inline OrientedBox as_box(const Obstacle& ob) {
  return {ob.position, ob.orientation.toRotationMatrix(), 0.5 * ob.dims};
}

inline bool overlaps(const OrientedBox& box, const Obstacle& ob) {
  // Cheap reject on bounding spheres.
  const double reach = box.half.norm() + ob.bounding_radius() + kContactTolerance;
  if ((box.center - ob.position).squaredNorm() > reach * reach) return false;
  switch (ob.kind) {
    case ShapeKind::kCuboid:
      return detail::obb_obb_overlap(box, as_box(ob));
    case ShapeKind::kSphere: {
      const Vec3 local = box.rot.transpose() * (ob.position - box.center);
      const Vec3 closest = local.cwiseMax(-box.half).cwiseMin(box.half);
      return (local - closest).norm() <= ob.dims.x() + kContactTolerance;
    }
    case ShapeKind::kCylinder:
      return detail::obb_cylinder_overlap(box, ob);
  }
  return false;
}

// True if any box corner leaves the world box.
inline bool box_outside_bounds(const OrientedBox& box, const Vec3& lo, const Vec3& hi) {
  for (const Vec3& c : box.corners())
    if ((c.array() < lo.array()).any() || (c.array() > hi.array()).any()) return true;
  return false;
}

}  // namespace racesim
