#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "oracles.hpp"
#include "racesim/rng.hpp"
#include "racesim/sensors.hpp"

using namespace racesim;

namespace {

CameraParams small_camera(int w = 48, int h = 27) {
  CameraParams c;
  c.width = w;
  c.height = h;
  c.mount_position.setZero();
  c.tilt_angle = 0.0;
  return c;
}

oracle::V3 unit(const oracle::V3& v) { return oracle::scale(v, 1.0 / oracle::norm(v)); }

// A slab big enough to act as an infinite plane with its front face at x = d.
Obstacle wall_at(double d) { return Obstacle::cuboid(Vec3(d + 0.5, 0, 0), Quat::Identity(), Vec3(1, 1e4, 1e4)); }

RigidBodyState random_state(Rng& rng) {
  RigidBodyState s;
  s.p = Vec3(rng.uniform(-60, 60), rng.uniform(-60, 60), rng.uniform(-30, 30));
  s.q = rpy_to_quat(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5), rng.uniform(-3, 3));
  s.v = Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40));
  s.w = Vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
  return s;
}

}  // namespace

TEST(CameraPose, IdentityAndTilt) {
  RigidBodyState s;
  s.p = Vec3(1, 2, 3);
  const CameraPose a = camera_pose(s, small_camera());
  EXPECT_EQ(a.position, s.p);
  EXPECT_NEAR((a.rot - Mat3::Identity()).norm(), 0.0, 1e-15);
  CameraParams c = small_camera();
  c.tilt_angle = kPi / 6;
  const Vec3 axis = camera_pose(RigidBodyState{}, c).optical_axis();
  EXPECT_NEAR(std::asin(axis.z()), kPi / 6, 1e-12);
  EXPECT_NEAR(axis.y(), 0.0, 1e-15);
}

TEST(CameraPose, RandomAttitudeMatchesComposition) {
  Rng rng(4);
  CameraParams c;
  for (int i = 0; i < 200; ++i) {
    const RigidBodyState s = random_state(rng);
    c.tilt_angle = rng.uniform(0, 0.6);
    const CameraPose pose = camera_pose(s, c);
    const auto r = oracle::quat_matrix(s.q.w(), s.q.x(), s.q.y(), s.q.z());
    const auto axis = oracle::mul(oracle::mul(r, oracle::ry(-c.tilt_angle)), oracle::V3{1, 0, 0});
    const auto mount = oracle::mul(r, oracle::V3{c.mount_position.x(), c.mount_position.y(), c.mount_position.z()});
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(pose.optical_axis()[k], axis[static_cast<std::size_t>(k)], 1e-12);
      EXPECT_NEAR(pose.position[k], s.p[k] + mount[static_cast<std::size_t>(k)], 1e-12);
    }
  }
}

TEST(Depth, EmptySceneIsAllOnes) {
  const CameraParams c = small_camera();
  const DepthImage img = render_depth(CameraPose{}, c, Scene{});
  ASSERT_EQ(img.values.size(), 48u * 27u);
  for (float v : img.values) EXPECT_EQ(v, 1.0f);
}

TEST(Depth, WallPlaneClosedForm) {
  const std::vector<Obstacle> obs{wall_at(5.0)};
  const CameraParams odd = small_camera(49, 27);
  const DepthImage center = render_depth(CameraPose{}, odd, Scene{obs, {}, std::nullopt});
  EXPECT_NEAR(center.at(13, 24), 0.25, 1e-6);

  const CameraParams c = small_camera();
  const DepthImage img = render_depth(CameraPose{}, c, Scene{obs, {}, std::nullopt});
  for (int row = 0; row < c.height; ++row) {
    for (int col = 0; col < c.width; ++col) {
      const auto u = unit(oracle::pixel_ray(c.width, c.height, c.hfov, row, col));
      const double expected = std::min(oracle::plane_hit(u, 5.0) / 20.0, 1.0);
      EXPECT_NEAR(img.at(row, col), expected, 1e-6);
      EXPECT_GE(img.at(row, col), 0.25f);
    }
  }
  // Obliquity grows toward the border along the middle row.
  for (int col = 24; col + 1 < c.width; ++col) EXPECT_LT(img.at(13, col), img.at(13, col + 1));
}

TEST(Depth, SphereClosedForm) {
  const std::vector<Obstacle> obs{Obstacle::sphere(Vec3(10, 0, 0), 1.0)};
  const DepthImage center = render_depth(CameraPose{}, small_camera(49, 27), Scene{obs, {}, std::nullopt});
  EXPECT_NEAR(center.at(13, 24), 9.0 / 20.0, 1e-6);
  const CameraParams c = small_camera();
  const DepthImage img = render_depth(CameraPose{}, c, Scene{obs, {}, std::nullopt});
  int hits = 0;
  for (int row = 0; row < c.height; ++row) {
    for (int col = 0; col < c.width; ++col) {
      const auto u = unit(oracle::pixel_ray(c.width, c.height, c.hfov, row, col));
      const double t = oracle::sphere_hit(u, {10, 0, 0}, 1.0);
      const double expected = std::min(t / 20.0, 1.0);
      EXPECT_NEAR(img.at(row, col), expected, 1e-6);
      hits += std::isfinite(t);
    }
  }
  EXPECT_GT(hits, 4);
}

TEST(Depth, OrderIndependentAndWalls) {
  Rng rng(10);
  std::vector<Obstacle> obs;
  for (int i = 0; i < 12; ++i)
    obs.push_back(Obstacle::sphere(Vec3(rng.uniform(3, 15), rng.uniform(-6, 6), rng.uniform(-3, 3)), rng.uniform(0.3, 1)));
  std::vector<Obstacle> rev(obs.rbegin(), obs.rend());
  const CameraParams c = small_camera();
  const DepthImage a = render_depth(CameraPose{}, c, Scene{obs, {}, std::nullopt});
  const DepthImage b = render_depth(CameraPose{}, c, Scene{rev, {}, std::nullopt});
  EXPECT_EQ(a.values, b.values);

  // Inside a 10 m box the walls bound every ray.
  const Bounds3 room{Vec3::Constant(-5), Vec3::Constant(5)};
  const DepthImage w = render_depth(CameraPose{}, c, Scene{{}, {}, room});
  for (float v : w.values) {
    EXPECT_LT(v, 1.0f);
    EXPECT_GE(v, 0.25f - 1e-6f);
  }
}

TEST(Depth, DistanceScalesWithRange) {
  const std::vector<Obstacle> obs{wall_at(8.0)};
  CameraParams a = small_camera(), b = small_camera();
  b.d_max = 40.0;
  const DepthImage ia = render_depth(CameraPose{}, a, Scene{obs, {}, std::nullopt});
  const DepthImage ib = render_depth(CameraPose{}, b, Scene{obs, {}, std::nullopt});
  for (std::size_t i = 0; i < ia.values.size(); ++i) {
    if (ia.values[i] < 1.0f) {
      EXPECT_NEAR(ia.values[i] * 20.0, ib.values[i] * 40.0, 1e-4);
    }
  }
}

TEST(Depth, PgmExport) {
  DepthImage img;
  img.width = 2;
  img.height = 1;
  img.values = {0.0f, 1.0f};
  const std::string path = ::testing::TempDir() + "/racesim_depth.pgm";
  write_pgm16(img, path);
  std::ifstream in(path, std::ios::binary);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(data.size(), 13u + 4u);
  EXPECT_EQ(data.substr(0, 13), "P5\n2 1\n65535\n");
  EXPECT_EQ(data[13], 0);
  EXPECT_EQ(data[14], 0);
  EXPECT_EQ(static_cast<unsigned char>(data[15]), 0xFF);
  EXPECT_EQ(static_cast<unsigned char>(data[16]), 0xFF);
  std::remove(path.c_str());
}

TEST(StateObs, RestAtOrigin) {
  RigidBodyState s;
  s.p = Vec3(3, 4, 5);
  const StateObs o = build_state_obs(s, s.p, ObsNormParams{});
  const StateObs expected{0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(o, expected);
}

TEST(StateObs, MatchesScalarOracleAndSaturates) {
  Rng rng(3);
  const ObsNormParams n;
  for (int i = 0; i < 1000; ++i) {
    const RigidBodyState s = random_state(rng);
    const Vec3 p0(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const StateObs o = build_state_obs(s, p0, n);
    const auto r = oracle::quat_matrix(s.q.w(), s.q.x(), s.q.y(), s.q.z());
    std::array<double, 18> e{};
    for (int k = 0; k < 3; ++k) {
      e[k] = (s.p[k] - p0[k]) / n.p_max;
      e[3 + k] = r[k][0];
      e[6 + k] = r[k][1];
      e[9 + k] = r[k][2];
      e[12 + k] = s.v[k] / n.v_max;
      e[15 + k] = s.w[k] / n.omega_max;
    }
    for (std::size_t k = 0; k < 18; ++k) {
      EXPECT_NEAR(o[k], oracle::clamp1(e[k]), 1e-12);
      EXPECT_TRUE(std::isfinite(o[k]));
    }
  }
  RigidBodyState fast;
  fast.v = Vec3(100, -100, 0);
  const StateObs o = build_state_obs(fast, Vec3::Zero(), n);
  EXPECT_EQ(o[12], 1.0);
  EXPECT_EQ(o[13], -1.0);
}

TEST(WaypointObs, FarOnAxisIsSymmetric) {
  Waypoint wp;
  wp.width = wp.height = 1.8;
  const auto b = waypoint_block(Vec3(-1000, 0, 0), wp, 20.0);
  EXPECT_NEAR(b[0], 1.0, 1e-12);
  RigidBodyState s;
  s.p = Vec3(-7, 0, 0);
  const WaypointObs o = build_waypoint_obs(s, wp, wp, 20.0);
  for (int k = 2; k <= 4; ++k) EXPECT_NEAR(o[static_cast<std::size_t>(k)], o[1], 1e-15);
  EXPECT_NEAR(o[1], std::sqrt(49 + 2 * 0.81) / 20.0, 1e-12);
}

TEST(WaypointObs, DegenerateCenterAndCorner) {
  Waypoint wp;
  const auto c = waypoint_block(wp.position, wp, 20.0);
  EXPECT_EQ(c[0], 0.0);
  const auto k = waypoint_block(wp.corners()[2], wp, 20.0);
  EXPECT_EQ(k[3], 0.0);
  EXPECT_EQ(k[5 + 3 * 2], 0.0);
  EXPECT_EQ(k[6 + 3 * 2], 0.0);
  EXPECT_EQ(k[7 + 3 * 2], 0.0);
}

TEST(WaypointObs, MatchesScalarOracle) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    Waypoint wp;
    wp.position = Vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-10, 10));
    wp.orientation = rpy_to_quat(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-3, 3));
    wp.width = rng.uniform(1.4, 2.0);
    wp.height = rng.uniform(1.4, 2.0);
    const Vec3 p(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-15, 15));
    const auto got = waypoint_block(p, wp, 20.0);
    const auto& q = wp.orientation;
    const auto want = oracle::waypoint_block({p.x(), p.y(), p.z()}, {wp.position.x(), wp.position.y(), wp.position.z()},
                                             oracle::quat_matrix(q.w(), q.x(), q.y(), q.z()), wp.width, wp.height, 20.0);
    for (std::size_t k = 0; k < 17; ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
    for (std::size_t k = 0; k < 4; ++k) {
      const double n2 = got[5 + 3 * k] * got[5 + 3 * k] + got[6 + 3 * k] * got[6 + 3 * k] + got[7 + 3 * k] * got[7 + 3 * k];
      EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6);
    }
    EXPECT_GE(got[0], -1.0);
    EXPECT_LE(got[0], 1.0);
  }
}
