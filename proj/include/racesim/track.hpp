#pragma once

// Waypoints, procedural track generation, and track-anchored obstacles.
//
// Waypoint frame: origin at the rectangle center, +x is the valid pass
// direction, y spans the width and z the height.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "racesim/config.hpp"
#include "racesim/errors.hpp"
#include "racesim/geometry.hpp"
#include "racesim/math.hpp"
#include "racesim/rng.hpp"

namespace racesim {

struct Waypoint {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  double width = 2.0;
  double height = 2.0;
  bool bars = false;

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
  Vec3 axis() const { return orientation * Vec3::UnitX(); }
  Vec3 to_local(const Vec3& p) const { return orientation.conjugate() * (p - position); }

  // Fixed corner order in the waypoint frame: (+y+z), (-y+z), (-y-z), (+y-z).
  std::array<Vec3, 4> corners() const {
    const double hw = 0.5 * width, hh = 0.5 * height;
    const std::array<Vec3, 4> local{Vec3(0, hw, hh), Vec3(0, -hw, hh), Vec3(0, -hw, -hh), Vec3(0, hw, -hh)};
    std::array<Vec3, 4> out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = position + orientation * local[i];
    return out;
  }
};

struct RelPoseParams {
  double psi = 0.0;
  double theta = 0.0;
  double r = 1.0;
  double alpha = 0.0;
  double gamma = 0.0;
};

struct TrackSpec {
  std::vector<Waypoint> waypoints;
  // Last waypoint that must be passed. Generated segments carry one extra
  // waypoint after it that only feeds the observation.
  int final_index = 0;
  std::uint64_t seed = 0;
  int level = 0;  // 0 when not generated from a preset
  Bounds3 env_bounds;
};

// Track plus its obstacles (gate bars excluded; they derive from waypoints).
struct Course {
  TrackSpec track;
  std::vector<Obstacle> obstacles;
  int dropped = 0;  // obstacles that could not be placed
};

// Pose of the next waypoint from the previous pose and relative parameters.
inline std::pair<Vec3, Mat3> next_waypoint_pose(const Vec3& p_i, const Mat3& r_i, const RelPoseParams& rp) {
  const Mat3 turn = rot_y(rp.theta) * rot_z(rp.psi) * r_i;
  const Vec3 p_j = rp.r * turn.col(0) + p_i;
  const Mat3 r_j = rot_y(rp.gamma) * rot_x(rp.alpha) * turn;
  return {p_j, r_j};
}

inline RelPoseParams sample_rel_pose(const RandomizationBounds& b, Rng& rng) {
  RelPoseParams rp;
  rp.psi = rng.uniform(b.rel_pose_lo[0], b.rel_pose_hi[0]);
  rp.theta = rng.uniform(b.rel_pose_lo[1], b.rel_pose_hi[1]);
  rp.r = rng.uniform(b.rel_pose_lo[2], b.rel_pose_hi[2]);
  rp.alpha = rng.uniform(b.rel_pose_lo[3], b.rel_pose_hi[3]);
  rp.gamma = rng.uniform(b.rel_pose_lo[4], b.rel_pose_hi[4]);
  return rp;
}

// Axis-aligned extent of all pass-region corners and centers.
inline std::pair<Vec3, Vec3> track_extent(const TrackSpec& t) {
  Vec3 lo = Vec3::Constant(kInf), hi = Vec3::Constant(-kInf);
  for (const auto& wp : t.waypoints) {
    lo = lo.cwiseMin(wp.position);
    hi = hi.cwiseMax(wp.position);
    for (const Vec3& c : wp.corners()) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  return {lo, hi};
}

// Smallest rigid translation moving the track extent (grown by `margin`)
// inside the world box. Throws TrackGenerationError if it cannot fit.
inline TrackSpec fit_to_bounds(const TrackSpec& track, const Bounds3& env, double margin = 0.0) {
  auto [lo, hi] = track_extent(track);
  lo.array() -= margin;
  hi.array() += margin;
  Vec3 offset = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (hi[i] - lo[i] > env.hi[i] - env.lo[i]) throw TrackGenerationError("track does not fit inside env bounds");
    if (lo[i] < env.lo[i]) offset[i] = env.lo[i] - lo[i];
    else if (hi[i] > env.hi[i]) offset[i] = env.hi[i] - hi[i];
  }
  TrackSpec out = track;
  out.env_bounds = env;
  for (auto& wp : out.waypoints) wp.position += offset;
  return out;
}

// Extra clearance kept between the fitted track and the world walls.
inline constexpr double kTrackFitMargin = 3.0;

// One attempt: no retry, no fitting.
inline TrackSpec sample_track_layout(const RandomizationBounds& b, int n, Rng& rng) {
  TrackSpec t;
  Vec3 p = Vec3::Zero();
  Mat3 r = rpy_to_matrix(rng.uniform(b.init_wp_rpy_lo.x(), b.init_wp_rpy_hi.x()),
                         rng.uniform(b.init_wp_rpy_lo.y(), b.init_wp_rpy_hi.y()),
                         rng.uniform(b.init_wp_rpy_lo.z(), b.init_wp_rpy_hi.z()));
  for (int i = 0; i < n; ++i) {
    if (i > 0) std::tie(p, r) = next_waypoint_pose(p, r, sample_rel_pose(b, rng));
    Waypoint wp;
    wp.position = p;
    wp.orientation = Quat(r).normalized();
    wp.width = rng.uniform(b.wp_size_range[0], b.wp_size_range[1]);
    wp.height = rng.uniform(b.wp_size_range[0], b.wp_size_range[1]);
    wp.bars = rng.bernoulli(b.bar_probability);
    t.waypoints.push_back(wp);
  }
  t.final_index = n - 2;
  return t;
}

// ---------------------------------------------------------------------------
// Gates and keep-out regions.

inline std::vector<Obstacle> gate_bars(const Waypoint& wp, double thickness) {
  if (!wp.bars) return {};
  const double hw = 0.5 * wp.width, hh = 0.5 * wp.height, t = thickness;
  const std::array<std::pair<Vec3, Vec3>, 4> local{{
      {Vec3(0, 0, hh + 0.5 * t), Vec3(t, wp.width + 2 * t, t)},
      {Vec3(0, 0, -hh - 0.5 * t), Vec3(t, wp.width + 2 * t, t)},
      {Vec3(0, hw + 0.5 * t, 0), Vec3(t, t, wp.height)},
      {Vec3(0, -hw - 0.5 * t, 0), Vec3(t, t, wp.height)},
  }};
  std::vector<Obstacle> out;
  for (const auto& [c, size] : local) {
    Obstacle ob = Obstacle::cuboid(wp.position + wp.orientation * c, wp.orientation, size);
    ob.category = ObstacleCategory::kBar;
    out.push_back(ob);
  }
  return out;
}

// Pass-through rectangle extruded +-margin along the waypoint x axis.
inline OrientedBox pass_region(const Waypoint& wp, double margin) {
  return {wp.position, wp.rotation(), Vec3(std::max(margin, 1e-6), 0.5 * wp.width, 0.5 * wp.height)};
}

// Region behind waypoint 0 where agents spawn, grown by the clearance.
inline OrientedBox spawn_keepout(const Waypoint& wp0, const InitParams& init) {
  const double cx = -(init.spawn_offset + 0.5 * init.spawn_length);
  return {wp0.position + wp0.orientation * Vec3(cx, 0, 0), wp0.rotation(),
          Vec3(0.5 * init.spawn_length + init.clear_radius, init.spawn_radius + init.clear_radius,
               init.spawn_radius + init.clear_radius)};
}

inline bool hits_any(const std::vector<OrientedBox>& keepouts, const Obstacle& ob) {
  return std::any_of(keepouts.begin(), keepouts.end(), [&](const OrientedBox& k) { return overlaps(k, ob); });
}

inline std::vector<OrientedBox> pass_regions(const TrackSpec& t, double margin) {
  std::vector<OrientedBox> out;
  for (const auto& wp : t.waypoints) out.push_back(pass_region(wp, margin));
  return out;
}

// ---------------------------------------------------------------------------
// Obstacle manager.

struct Placement {
  std::vector<Obstacle> obstacles;
  int dropped = 0;
};

// Walls: one per draw, on a random segment between consecutive waypoint
// centers, jittered laterally by at most `jitter`, facing the segment.
inline Placement place_wall_obstacles(const TrackSpec& track, int n, const Vec3& size_lo, const Vec3& size_hi,
                                      double jitter, const std::vector<OrientedBox>& keepouts, Rng& rng,
                                      int max_retries = 50, int first_group = 0) {
  Placement out;
  const int n_seg = static_cast<int>(track.waypoints.size()) - 1;
  if (n <= 0) return out;
  if (n_seg < 1) {
    out.dropped = n;
    return out;
  }
  for (int k = 0; k < n; ++k) {
    const Vec3 size(rng.uniform(size_lo.x(), size_hi.x()), rng.uniform(size_lo.y(), size_hi.y()),
                    rng.uniform(size_lo.z(), size_hi.z()));
    bool placed = false;
    for (int attempt = 0; attempt < max_retries && !placed; ++attempt) {
      const auto seg = static_cast<std::size_t>(rng.uniform_int(0, n_seg - 1));
      const Vec3& a = track.waypoints[seg].position;
      const Vec3& b = track.waypoints[seg + 1].position;
      const Mat3 frame = frame_from_forward(b - a);
      const double t = rng.uniform01();
      const double rad = jitter * rng.uniform01();
      const double ang = rng.uniform(0.0, kTwoPi);
      const Vec3 c = a + t * (b - a) + rad * (std::cos(ang) * frame.col(1) + std::sin(ang) * frame.col(2));
      Obstacle ob = Obstacle::cuboid(c, Quat(frame).normalized(), size);
      ob.category = ObstacleCategory::kWall;
      ob.group = first_group + static_cast<int>(out.obstacles.size());
      if (hits_any(keepouts, ob)) continue;
      out.obstacles.push_back(ob);
      placed = true;
    }
    if (!placed) ++out.dropped;
  }
  return out;
}

// Point at arc length s along the polyline through `pts`.
inline Vec3 polyline_point(const std::vector<Vec3>& pts, double s) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = (pts[i + 1] - pts[i]).norm();
    if (s <= len || i + 2 == pts.size()) return pts[i] + (len > 0 ? std::clamp(s / len, 0.0, 1.0) : 0.0) * (pts[i + 1] - pts[i]);
    s -= len;
  }
  return pts.empty() ? Vec3::Zero() : pts.front();
}

inline double polyline_length(const std::vector<Vec3>& pts) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += (pts[i + 1] - pts[i]).norm();
  return total;
}

// Arc-length position drawn uniformly over the whole polyline.
inline double sample_arclength(const std::vector<Vec3>& pts, Rng& rng) {
  return rng.uniform(0.0, polyline_length(pts));
}

// A tree: vertical trunk cylinder centered on the anchor plus tilted branch
// cylinders attached along the trunk. All primitives share `group`.
inline std::vector<Obstacle> make_tree(const Vec3& anchor, const TreeParams& p, int group, Rng& rng) {
  std::vector<Obstacle> parts;
  const double radius = rng.uniform(p.trunk_radius[0], p.trunk_radius[1]);
  const double height = rng.uniform(p.trunk_height[0], p.trunk_height[1]);
  Obstacle trunk = Obstacle::cylinder(anchor, Quat::Identity(), radius, height);
  trunk.category = ObstacleCategory::kTree;
  trunk.group = group;
  parts.push_back(trunk);
  const auto n_branch = rng.uniform_int(p.branch_count[0], p.branch_count[1]);
  for (std::int64_t k = 0; k < n_branch; ++k) {
    const double z = rng.uniform(-0.25 * height, 0.5 * height);
    const double len = rng.uniform(p.branch_length[0], p.branch_length[1]);
    const double tilt = rng.uniform(p.branch_tilt[0], p.branch_tilt[1]);
    const double az = rng.uniform(0.0, kTwoPi);
    const Mat3 rot = rot_z(az) * rot_y(tilt);  // local z -> tilted direction
    const Vec3 dir = rot.col(2);
    const Vec3 base = anchor + Vec3(0, 0, z);
    Obstacle br = Obstacle::cylinder(base + 0.5 * len * dir, Quat(rot).normalized(), p.branch_radius_ratio * radius, len);
    br.category = ObstacleCategory::kTree;
    br.group = group;
    parts.push_back(br);
  }
  return parts;
}

// Trees with anchors uniform by arc length along the waypoint polyline. A
// tree touching a keep-out region is redrawn (anchor and shape).
inline Placement place_tree_obstacles(const TrackSpec& track, int n, const TreeParams& params,
                                      const std::vector<OrientedBox>& keepouts, Rng& rng, int max_retries = 50,
                                      int first_group = 0) {
  Placement out;
  std::vector<Vec3> pts;
  for (const auto& wp : track.waypoints) pts.push_back(wp.position);
  if (n <= 0) return out;
  for (int k = 0; k < n; ++k) {
    bool placed = false;
    const int group = first_group + k;
    for (int attempt = 0; attempt < max_retries && !placed; ++attempt) {
      const Vec3 anchor = polyline_point(pts, sample_arclength(pts, rng));
      auto parts = make_tree(anchor, params, group, rng);
      if (std::any_of(parts.begin(), parts.end(), [&](const Obstacle& o) { return hits_any(keepouts, o); })) continue;
      out.obstacles.insert(out.obstacles.end(), parts.begin(), parts.end());
      placed = true;
    }
    if (!placed) ++out.dropped;
  }
  return out;
}

// Shapes on rings around the listed waypoints, in each waypoint's plane.
// `n` is split evenly over the valid waypoint indices (remainder to the
// first ones).
inline Placement place_orbit_obstacles(const TrackSpec& track, int n, const OrbitParams& params,
                                       const std::vector<OrientedBox>& keepouts, Rng& rng, int max_retries = 50,
                                       int first_group = 0) {
  Placement out;
  std::vector<int> hosts;
  for (int w : params.waypoints)
    if (w >= 0 && w < static_cast<int>(track.waypoints.size())) hosts.push_back(w);
  if (n <= 0) return out;
  if (hosts.empty()) {
    out.dropped = n;
    return out;
  }
  const int per = n / static_cast<int>(hosts.size());
  const int extra = n % static_cast<int>(hosts.size());
  int group = first_group;
  for (std::size_t h = 0; h < hosts.size(); ++h) {
    const Waypoint& wp = track.waypoints[static_cast<std::size_t>(hosts[h])];
    const int count = per + (static_cast<int>(h) < extra ? 1 : 0);
    for (int k = 0; k < count; ++k, ++group) {
      bool placed = false;
      for (int attempt = 0; attempt < max_retries && !placed; ++attempt) {
        const double ring = rng.uniform(params.radius[0], params.radius[1]);
        const double ang = rng.uniform(0.0, kTwoPi);
        const double size = rng.uniform(params.shape_size[0], params.shape_size[1]);
        const Vec3 c = wp.position + wp.orientation * Vec3(0.0, ring * std::cos(ang), ring * std::sin(ang));
        const auto kind = rng.uniform_int(0, 2);
        Obstacle ob;
        if (kind == 0) {
          ob = Obstacle::cuboid(c, wp.orientation * Quat(rot_x(rng.uniform(0.0, kTwoPi))), Vec3::Constant(size));
        } else if (kind == 1) {
          ob = Obstacle::cylinder(c, wp.orientation * Quat(rot_x(rng.uniform(0.0, kTwoPi))), 0.5 * size, 2.0 * size);
        } else {
          ob = Obstacle::sphere(c, 0.5 * size);
        }
        ob.orientation.normalize();
        ob.category = ObstacleCategory::kOrbit;
        ob.group = group;
        if (hits_any(keepouts, ob)) continue;
        out.obstacles.push_back(ob);
        placed = true;
      }
      if (!placed) ++out.dropped;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

enum class Crossing { kNone, kPassed, kWrongSide };

// Classifies the control-rate segment p_prev -> p_cur against the waypoint
// rectangle. Crossing the plane outside the rectangle is kNone; hitting bars
// is left to collision checking.
inline Crossing waypoint_crossing(const Vec3& p_prev, const Vec3& p_cur, const Waypoint& wp) {
  const Vec3 a = wp.to_local(p_prev);
  const Vec3 b = wp.to_local(p_cur);
  const bool forward = a.x() < 0.0 && b.x() >= 0.0;
  const bool backward = a.x() >= 0.0 && b.x() < 0.0;
  if (!forward && !backward) return Crossing::kNone;
  const double t = a.x() / (a.x() - b.x());
  const Vec3 hit = a + t * (b - a);
  if (std::abs(hit.y()) > 0.5 * wp.width || std::abs(hit.z()) > 0.5 * wp.height) return Crossing::kNone;
  return forward ? Crossing::kPassed : Crossing::kWrongSide;
}

// True when a gate's bars intrude into another waypoint's pass region.
inline bool bars_block_other_gates(const TrackSpec& t, double bar_thickness, double margin) {
  for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
    for (const auto& bar : gate_bars(t.waypoints[i], bar_thickness)) {
      for (std::size_t j = 0; j < t.waypoints.size(); ++j) {
        if (j != i && overlaps(pass_region(t.waypoints[j], margin), bar)) return true;
      }
    }
  }
  return false;
}

// Track layout with retries: a layout is rejected if it cannot be fitted into
// the world box or if gate bars block another gate.
inline TrackSpec generate_track(const RandomizationBounds& b, int n, Rng& rng) {
  if (n < 3) throw TrackGenerationError("generate_track: need at least 3 waypoints");
  for (int attempt = 0; attempt < b.max_track_retries; ++attempt) {
    TrackSpec t = sample_track_layout(b, n, rng);
    if (bars_block_other_gates(t, b.bar_thickness, b.clearance_margin)) continue;
    try {
      return fit_to_bounds(t, b.env_bounds, kTrackFitMargin);
    } catch (const TrackGenerationError&) {
      continue;
    }
  }
  throw TrackGenerationError("generate_track: no feasible track after " + std::to_string(b.max_track_retries) +
                             " attempts");
}

// Full randomized course: track, then walls, trees and orbiting shapes kept
// clear of every pass region and of the spawn zone behind waypoint 0.
inline Course generate_course(const RandomizationBounds& b, const InitParams& init, int n, Rng& rng,
                              int level = 0) {
  Course c;
  c.track = generate_track(b, n, rng);
  c.track.level = level;
  auto keepouts = pass_regions(c.track, b.clearance_margin);
  keepouts.push_back(spawn_keepout(c.track.waypoints.front(), init));
  auto walls = place_wall_obstacles(c.track, b.n_wall, b.wall_size_lo, b.wall_size_hi, b.wall_jitter, keepouts, rng,
                                    b.max_placement_retries, 0);
  auto trees = place_tree_obstacles(c.track, b.n_tree, b.tree, keepouts, rng, b.max_placement_retries, b.n_wall);
  auto orbits = place_orbit_obstacles(c.track, b.n_orbit, b.orbit, keepouts, rng, b.max_placement_retries,
                                      b.n_wall + b.n_tree);
  for (auto* p : {&walls, &trees, &orbits}) {
    c.obstacles.insert(c.obstacles.end(), p->obstacles.begin(), p->obstacles.end());
    c.dropped += p->dropped;
  }
  return c;
}

// Number of distinct obstacles (composite primitives counted once).
inline int count_obstacles(const std::vector<Obstacle>& obs, std::optional<ObstacleCategory> only = std::nullopt) {
  std::set<std::pair<int, int>> seen;
  for (const auto& o : obs) {
    if (o.category == ObstacleCategory::kBar) continue;
    if (only && o.category != *only) continue;
    seen.insert({static_cast<int>(o.category), o.group});
  }
  return static_cast<int>(seen.size());
}

}  // namespace racesim
