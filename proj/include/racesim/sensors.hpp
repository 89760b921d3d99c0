#pragma once

// Observation construction: ray-cast depth image, 18-dim drone state vector,
// and the 34-dim vector describing the next two waypoints.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "racesim/config.hpp"
#include "racesim/dynamics.hpp"
#include "racesim/geometry.hpp"
#include "racesim/track.hpp"

namespace racesim {

inline constexpr int kStateObsDim = 18;
inline constexpr int kWaypointObsDim = 34;
inline constexpr int kWaypointBlockDim = 17;
inline constexpr int kActionDim = 4;

using StateObs = std::array<double, kStateObsDim>;
using WaypointObs = std::array<double, kWaypointObsDim>;

// Camera frame: x is the optical axis, y points left in the image, z up.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Mat3 rot = Mat3::Identity();  // world <- camera

  Vec3 optical_axis() const { return rot.col(0); }
};

inline CameraPose camera_pose(const RigidBodyState& s, const CameraParams& cam) {
  const Mat3 r_wb = s.q.toRotationMatrix();
  return {s.p + r_wb * cam.mount_position, r_wb * rot_y(-cam.tilt_angle)};
}

// Row-major, top-left origin, values in [0, 1].
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  bool empty() const { return values.empty(); }
};

// What the camera sees: analytic primitives plus, optionally, the six
// inward-facing walls of the world box.
struct Scene {
  std::span<const Obstacle> obstacles;
  std::span<const Obstacle> bars;
  std::optional<Bounds3> walls;
};

// Unnormalized camera-frame ray through the center of pixel (row, col).
inline Vec3 pixel_ray(const CameraParams& cam, int row, int col) {
  const double f = 0.5 * cam.width / std::tan(0.5 * cam.hfov);
  const double u = col + 0.5;
  const double v = row + 0.5;
  return Vec3(f, 0.5 * cam.width - u, 0.5 * cam.height - v);
}

namespace detail {

struct CulledPrimitive {
  const Obstacle* ob;
  Vec3 center;
  double radius2;
};

inline void cull_into(std::vector<CulledPrimitive>& out, std::span<const Obstacle> obs, const Vec3& eye, double d_max) {
  for (const auto& ob : obs) {
    const double r = ob.bounding_radius();
    if ((ob.position - eye).norm() - r > d_max) continue;
    out.push_back({&ob, ob.position, r * r});
  }
}

}  // namespace detail

// Pinhole depth: per pixel, Euclidean distance to the nearest surface along
// the ray, divided by d_max and clamped to 1. Misses read exactly 1.
inline DepthImage render_depth(const CameraPose& pose, const CameraParams& cam, const Scene& scene) {
  DepthImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.values.assign(static_cast<std::size_t>(cam.width) * cam.height, 1.0f);
  std::vector<detail::CulledPrimitive> prims;
  detail::cull_into(prims, scene.obstacles, pose.position, cam.d_max);
  detail::cull_into(prims, scene.bars, pose.position, cam.d_max);
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const Vec3 dir = (pose.rot * pixel_ray(cam, row, col)).normalized();
      double best = cam.d_max;
      if (scene.walls) {
        if (auto t = ray_exit_bounds(scene.walls->lo, scene.walls->hi, pose.position, dir)) best = std::min(best, *t);
      }
      for (const auto& pr : prims) {
        // Bounding-sphere rejection; also skips hits farther than `best`.
        const Vec3 oc = pr.center - pose.position;
        const double tc = oc.dot(dir);
        const double d2 = oc.squaredNorm() - tc * tc;
        if (d2 > pr.radius2) continue;
        const double half = std::sqrt(pr.radius2 - d2);
        if (tc + half < 0.0 || tc - half >= best) continue;
        if (auto t = ray_cast(*pr.ob, pose.position, dir)) best = std::min(best, *t);
      }
      img.values[static_cast<std::size_t>(row) * cam.width + col] = static_cast<float>(std::min(best / cam.d_max, 1.0));
    }
  }
  return img;
}

// 16-bit binary portable graymap (P5, maxval 65535, big-endian samples).
inline void write_pgm16(const DepthImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (float v : img.values) {
    const auto s = static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 65535.0));
    const char bytes[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xFF)};
    out.write(bytes, 2);
  }
  if (!out) throw Error("failed writing image: " + path);
}

// [(p - p0)/p_max, x_B, y_B, z_B, v/v_max, w/w_max], clamped to [-1, 1].
inline StateObs build_state_obs(const RigidBodyState& s, const Vec3& p0, const ObsNormParams& norm) {
  StateObs out{};
  const Mat3 r = s.q.toRotationMatrix();
  const Vec3 rel = (s.p - p0) / norm.p_max;
  const Vec3 vel = s.v / norm.v_max;
  const Vec3 rate = s.w / norm.omega_max;
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = rel[i];
    out[static_cast<std::size_t>(3 + i)] = r(i, 0);
    out[static_cast<std::size_t>(6 + i)] = r(i, 1);
    out[static_cast<std::size_t>(9 + i)] = r(i, 2);
    out[static_cast<std::size_t>(12 + i)] = vel[i];
    out[static_cast<std::size_t>(15 + i)] = rate[i];
  }
  for (double& x : out) x = clamp_unit(x);
  return out;
}

// One 17-block: cosine similarity, 4 normalized corner distances, 4 unit
// corner directions. Degenerate cases: drone at the waypoint center gives
// s_c = 0; drone exactly on a corner gives distance 0 and a zero direction.
inline std::array<double, kWaypointBlockDim> waypoint_block(const Vec3& p, const Waypoint& wp, double l_max) {
  std::array<double, kWaypointBlockDim> out{};
  const Vec3 to_center = wp.position - p;
  const double n = to_center.norm();
  out[0] = n > 0.0 ? clamp_unit(to_center.dot(wp.axis()) / n) : 0.0;
  const auto corners = wp.corners();
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3 d = corners[k] - p;
    const double l = d.norm();
    out[1 + k] = std::min(l / l_max, 1.0);
    const Vec3 u = l > 0.0 ? Vec3(d / l) : Vec3::Zero();
    for (std::size_t c = 0; c < 3; ++c) out[5 + 3 * k + c] = u[static_cast<int>(c)];
  }
  return out;
}

inline WaypointObs build_waypoint_obs(const RigidBodyState& s, const Waypoint& next, const Waypoint& after,
                                      double l_max) {
  WaypointObs out{};
  const auto a = waypoint_block(s.p, next, l_max);
  const auto b = waypoint_block(s.p, after, l_max);
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + kWaypointBlockDim);
  return out;
}

struct ObservationBundle {
  DepthImage depth;  // empty when depth rendering is disabled
  StateObs state{};
  WaypointObs waypoints{};
  Vec4 prev_action = Vec4::Zero();
};

}  // namespace racesim
