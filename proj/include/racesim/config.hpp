#pragma once

// Typed configuration for the racing simulator.
//
// Every struct exposes `visit(v)` listing its fields as (key, member) pairs.
// The same table drives JSON reading, JSON writing, and equality, so the
// on-disk schema is exactly the list of keys below. Missing keys keep their
// defaults; unknown keys are rejected so typos never pass silently.
//
// Units: SI throughout (m, s, kg, rad). Rotor speeds are in rev/s.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "racesim/errors.hpp"
#include "racesim/math.hpp"

namespace nlohmann {
template <int N>
struct adl_serializer<Eigen::Matrix<double, N, 1>> {
  static void to_json(json& j, const Eigen::Matrix<double, N, 1>& v) {
    j = json::array();
    for (int i = 0; i < N; ++i) j.push_back(v[i]);
  }
  static void from_json(const json& j, Eigen::Matrix<double, N, 1>& v) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
      throw racesim::ParseError("expected array of " + std::to_string(N) + " numbers");
    for (int i = 0; i < N; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  }
};
}  // namespace nlohmann

namespace racesim {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Drone model.
//
// Body frame is FLU (x forward, y left, z up). Motor numbering follows the
// Betaflight Quad-X convention:
//   1 = rear-right, 2 = front-right, 3 = rear-left, 4 = front-left.
// Props-out: motors 1 and 4 spin counter-clockwise seen from above, 2 and 3
// clockwise. `spin_directions` stores the sign of the yaw reaction torque a
// rotor applies to the body, i.e. the negative of its spin direction
// (1 and 4 -> -1, 2 and 3 -> +1). Every sign test in the project uses this
// table.
struct DroneParams {
  double mass = 0.75;
  Vec3 inertia{0.0025, 0.0025, 0.0045};
  double rotor_constant = 50.0;   // k_r, 1/s
  double rotor_inertia = 2.0e-6;  // J_r, kg m^2
  std::array<Vec3, 4> rotor_positions{Vec3(-0.08, -0.08, 0.0), Vec3(0.08, -0.08, 0.0),
                                      Vec3(-0.08, 0.08, 0.0), Vec3(0.08, 0.08, 0.0)};
  std::array<double, 4> spin_directions{-1.0, 1.0, 1.0, -1.0};
  // f_p(Omega) in N, Omega in rev/s.
  std::vector<double> thrust_poly{0.0, 0.0, 3.6e-5};
  // tau_p(Omega) in N m.
  std::vector<double> torque_poly{0.0, 0.0, 5.8e-7};
  // Omega_s(u_m) in rev/s, u_m in [0, 1].
  std::vector<double> motor_poly{30.0, 420.0};
  Vec3 collision_half_extents{0.12, 0.12, 0.04};

  template <typename V>
  void visit(V&& v) {
    v("mass", mass);
    v("inertia", inertia);
    v("rotor_constant", rotor_constant);
    v("rotor_inertia", rotor_inertia);
    v("rotor_positions", rotor_positions);
    v("spin_directions", spin_directions);
    v("thrust_poly", thrust_poly);
    v("torque_poly", torque_poly);
    v("motor_poly", motor_poly);
    v("collision_half_extents", collision_half_extents);
  }
};

struct DragParams {
  double air_density = 1.225;
  double area_t = 0.1;
  double area_r = 0.01;
  Vec3 c0{1.4, 1.4, 1.4};
  Vec3 c1{0.02, 0.02, 0.02};
  Vec3 c2{0.1, 0.1, 0.1};
  Vec3 c3{0.5, 0.5, 0.5};

  template <typename V>
  void visit(V&& v) {
    v("air_density", air_density);
    v("area_t", area_t);
    v("area_r", area_r);
    v("c0", c0);
    v("c1", c1);
    v("c2", c2);
    v("c3", c3);
  }
};

struct CameraParams {
  Vec3 mount_position{0.1, 0.0, 0.02};
  double tilt_angle = 0.35;  // pitch up from body x
  double hfov = kPi / 2.0;
  int width = 480;
  int height = 270;
  double d_max = 20.0;

  template <typename V>
  void visit(V&& v) {
    v("mount_position", mount_position);
    v("tilt_angle", tilt_angle);
    v("hfov", hfov);
    v("width", width);
    v("height", height);
    v("d_max", d_max);
  }
};

// Axis-aligned world box.
struct Bounds3 {
  Vec3 lo{-40.0, -40.0, -20.0};
  Vec3 hi{40.0, 40.0, 20.0};

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }

  template <typename V>
  void visit(V&& v) {
    v("lo", lo);
    v("hi", hi);
  }
};

struct TreeParams {
  std::array<double, 2> trunk_radius{0.1, 0.25};
  std::array<double, 2> trunk_height{3.0, 6.0};
  std::array<int, 2> branch_count{2, 4};
  std::array<double, 2> branch_length{0.8, 1.6};
  double branch_radius_ratio = 0.5;        // branch radius / trunk radius
  std::array<double, 2> branch_tilt{0.5, 1.1};  // from vertical

  template <typename V>
  void visit(V&& v) {
    v("trunk_radius", trunk_radius);
    v("trunk_height", trunk_height);
    v("branch_count", branch_count);
    v("branch_length", branch_length);
    v("branch_radius_ratio", branch_radius_ratio);
    v("branch_tilt", branch_tilt);
  }
};

struct OrbitParams {
  std::array<double, 2> radius{2.0, 3.5};
  std::array<double, 2> shape_size{0.2, 0.5};
  std::vector<int> waypoints{0, 1};

  template <typename V>
  void visit(V&& v) {
    v("radius", radius);
    v("shape_size", shape_size);
    v("waypoints", waypoints);
  }
};

// Relative-pose tuple order: (psi, theta, r, alpha, gamma).
using RelPoseTuple = std::array<double, 5>;

struct RandomizationBounds {
  RelPoseTuple rel_pose_lo{-0.3, -0.3, 6.0, 0.0, 0.0};
  RelPoseTuple rel_pose_hi{0.3, 0.3, 18.0, 3.14, 0.2};
  std::array<double, 2> wp_size_range{1.4, 2.0};
  // Roll, pitch, yaw of the first waypoint.
  Vec3 init_wp_rpy_lo{-0.2, -0.2, -kPi};
  Vec3 init_wp_rpy_hi{0.2, 0.2, kPi};
  int n_wall = 12;
  int n_tree = 4;
  int n_orbit = 0;
  Vec3 wall_size_lo{0.2, 1.5, 1.5};
  Vec3 wall_size_hi{0.2, 2.5, 2.5};
  double wall_jitter = 1.0;
  TreeParams tree;
  OrbitParams orbit;
  double bar_probability = 0.5;
  double bar_thickness = 0.1;
  double clearance_margin = 0.5;
  Bounds3 env_bounds;
  int max_track_retries = 100;
  int max_placement_retries = 50;

  template <typename V>
  void visit(V&& v) {
    v("rel_pose_lo", rel_pose_lo);
    v("rel_pose_hi", rel_pose_hi);
    v("wp_size_range", wp_size_range);
    v("init_wp_rpy_lo", init_wp_rpy_lo);
    v("init_wp_rpy_hi", init_wp_rpy_hi);
    v("n_wall", n_wall);
    v("n_tree", n_tree);
    v("n_orbit", n_orbit);
    v("wall_size_lo", wall_size_lo);
    v("wall_size_hi", wall_size_hi);
    v("wall_jitter", wall_jitter);
    v("tree", tree);
    v("orbit", orbit);
    v("bar_probability", bar_probability);
    v("bar_thickness", bar_thickness);
    v("clearance_margin", clearance_margin);
    v("env_bounds", env_bounds);
    v("max_track_retries", max_track_retries);
    v("max_placement_retries", max_placement_retries);
  }
};

// Shape of the guidance field around the target waypoint.
struct GuidanceParams {
  double k0 = 5.0;
  double k1 = 1.0;
  double k2_front = 0.25;  // x > 0
  double k2_back = 0.5;    // x <= 0

  template <typename V>
  void visit(V&& v) {
    v("k0", k0);
    v("k1", k1);
    v("k2_front", k2_front);
    v("k2_back", k2_back);
  }
};

// Index into RewardWeights::lambda and RewardBreakdown terms.
enum RewardTerm : int { kProg = 0, kPrec, kCmd, kCol, kGuid, kWp, kTime, kVel, kNumRewardTerms };

inline constexpr std::array<const char*, kNumRewardTerms> kRewardTermNames{
    "prog", "prec", "cmd", "col", "guid", "wp", "time", "vel"};

struct RewardWeights {
  // Order: prog, prec, cmd, col, guid, wp, time, vel. The sparse entries
  // (col, wp, time) must be 1: their magnitudes below are post-weight.
  std::array<double, kNumRewardTerms> lambda{1.0, 0.1, 0.05, 1.0, 0.5, 1.0, 1.0, 0.01};
  double collision_value = -10.0;
  double waypoint_value = 5.0;
  double timeout_value = -10.0;
  GuidanceParams guidance;
  double perception_coef = -1.0;  // c in exp(c * delta^4) - 1
  double cmd_action_coef = 1.0;   // weight of |a_t - a_{t-1}|^2
  double cmd_rate_coef = 0.1;     // weight of |omega_B|
  double k3 = -1.0;               // lateral velocity
  double k4 = -1.0;               // backward velocity

  template <typename V>
  void visit(V&& v) {
    v("lambda", lambda);
    v("collision_value", collision_value);
    v("waypoint_value", waypoint_value);
    v("timeout_value", timeout_value);
    v("guidance", guidance);
    v("perception_coef", perception_coef);
    v("cmd_action_coef", cmd_action_coef);
    v("cmd_rate_coef", cmd_rate_coef);
    v("k3", k3);
    v("k4", k4);
  }
};

// "Actual rates" stick curve plus rate PID and mixer settings.
struct ControllerParams {
  Vec3 center_rate{3.49, 3.49, 3.49};  // rad/s slope at stick center
  Vec3 max_rate{10.47, 10.47, 10.47};  // rad/s at full stick
  Vec3 expo{0.5, 0.5, 0.5};
  Vec3 kp{0.035, 0.035, 0.25};
  Vec3 ki{0.3, 0.3, 1.5};
  Vec3 kd{0.0004, 0.0004, 0.0};
  Vec3 integrator_limit{0.3, 0.3, 0.3};
  double mixer_idle = 0.0;

  template <typename V>
  void visit(V&& v) {
    v("center_rate", center_rate);
    v("max_rate", max_rate);
    v("expo", expo);
    v("kp", kp);
    v("ki", ki);
    v("kd", kd);
    v("integrator_limit", integrator_limit);
    v("mixer_idle", mixer_idle);
  }
};

struct ObsNormParams {
  double p_max = 40.0;
  double v_max = 25.0;
  double omega_max = 12.0;
  double l_max = 20.0;

  template <typename V>
  void visit(V&& v) {
    v("p_max", p_max);
    v("v_max", v_max);
    v("omega_max", omega_max);
    v("l_max", l_max);
  }
};

// Per-reset agent randomization. The spawn zone is a box behind waypoint 0
// along its -x axis: x in [-(offset + length), -offset], |y|,|z| <= radius.
// Obstacles are kept out of that box grown by `clear_radius`.
struct InitParams {
  double spawn_offset = 0.6;
  double spawn_length = 1.5;
  double spawn_radius = 0.4;
  double clear_radius = 1.0;
  std::array<double, 2> speed{0.0, 3.0};
  double body_rate_max = 1.0;
  double attitude_angle_max = 0.5;  // rotation about the wp0->wp1 vector
  Vec4 action_lo{-0.2, -0.2, -0.2, -0.3};
  Vec4 action_hi{0.2, 0.2, 0.2, 0.1};
  std::array<double, 2> camera_y_offset{-0.02, 0.02};
  std::array<double, 2> camera_z_offset{-0.02, 0.02};
  std::array<double, 2> camera_tilt{0.2, 0.5};
  double eval_multiplier = 2.0;  // widens speed/rate/attitude/action ranges

  template <typename V>
  void visit(V&& v) {
    v("spawn_offset", spawn_offset);
    v("spawn_length", spawn_length);
    v("spawn_radius", spawn_radius);
    v("clear_radius", clear_radius);
    v("speed", speed);
    v("body_rate_max", body_rate_max);
    v("attitude_angle_max", attitude_angle_max);
    v("action_lo", action_lo);
    v("action_hi", action_hi);
    v("camera_y_offset", camera_y_offset);
    v("camera_z_offset", camera_z_offset);
    v("camera_tilt", camera_tilt);
    v("eval_multiplier", eval_multiplier);
  }
};

struct EnvConfig {
  DroneParams drone;
  DragParams drag;
  CameraParams camera;
  RandomizationBounds bounds;
  RewardWeights rewards;
  ControllerParams controller;
  ObsNormParams obs;
  InitParams init;
  double physics_hz = 250.0;
  double control_hz = 25.0;
  int substeps = 10;
  double episode_time_limit = 15.0;
  int n_waypoints_per_segment = 4;
  std::uint64_t seed = 0;
  double gravity = 9.81;
  bool depth_enabled = true;
  bool auto_reset = false;
  bool eval_mode = false;

  double physics_dt() const { return 1.0 / physics_hz; }
  double control_dt() const { return static_cast<double>(substeps) / physics_hz; }

  template <typename V>
  void visit(V&& v) {
    v("drone", drone);
    v("drag", drag);
    v("camera", camera);
    v("bounds", bounds);
    v("rewards", rewards);
    v("controller", controller);
    v("obs", obs);
    v("init", init);
    v("physics_hz", physics_hz);
    v("control_hz", control_hz);
    v("substeps", substeps);
    v("episode_time_limit", episode_time_limit);
    v("n_waypoints_per_segment", n_waypoints_per_segment);
    v("seed", seed);
    v("gravity", gravity);
    v("depth_enabled", depth_enabled);
    v("auto_reset", auto_reset);
    v("eval_mode", eval_mode);
  }
};

// ---------------------------------------------------------------------------
// Generic visit-driven serialization.

namespace detail {

template <typename T, typename = void>
struct has_visit : std::false_type {};
template <typename T>
struct has_visit<T, std::void_t<decltype(std::declval<T&>().visit(
                        std::declval<void (*)(const char*, int&)>()))>> : std::true_type {};

template <typename T>
inline constexpr bool is_visitable_v = has_visit<std::remove_cvref_t<T>>::value;

template <typename T>
json to_json_value(const T& value);

template <typename T>
void from_json_value(const json& j, T& out, const std::string& path);

struct Writer {
  json& out;
  template <typename T>
  void operator()(const char* key, const T& field) {
    out[key] = to_json_value(field);
  }
};

struct Reader {
  const json& in;
  std::string path;
  std::set<std::string> seen;
  template <typename T>
  void operator()(const char* key, T& field) {
    seen.insert(key);
    if (auto it = in.find(key); it != in.end()) from_json_value(*it, field, path + key);
  }
};

template <typename T>
json to_json_value(const T& value) {
  if constexpr (is_visitable_v<T>) {
    json j = json::object();
    const_cast<T&>(value).visit(Writer{j});
    return j;
  } else {
    return json(value);
  }
}

template <typename T>
void from_json_value(const json& j, T& out, const std::string& path) {
  if constexpr (is_visitable_v<T>) {
    if (!j.is_object()) throw ParseError(path + ": expected an object");
    Reader r{j, path.empty() ? std::string() : path + ".", {}};
    out.visit(r);
    for (const auto& item : j.items()) {
      if (!r.seen.contains(item.key())) throw ParseError(r.path + item.key() + ": unknown key");
    }
  } else {
    try {
      out = j.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
}

}  // namespace detail

template <typename T>
  requires detail::is_visitable_v<T>
json to_json(const T& value) {
  return detail::to_json_value(value);
}

template <typename T>
  requires detail::is_visitable_v<T>
T from_json(const json& j) {
  T out{};
  detail::from_json_value(j, out, "");
  return out;
}

// Field-wise equality through the JSON image (exact for doubles, which are
// serialized with round-trip precision).
template <typename T>
  requires detail::is_visitable_v<T>
bool config_equal(const T& a, const T& b) {
  return to_json(a) == to_json(b);
}

// ---------------------------------------------------------------------------
// Validation: throws ValidationError naming the first violated invariant.

namespace detail {
inline void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ValidationError(where + ": " + what);
}
inline bool finite_all(const Vec3& v) { return v.allFinite(); }
}  // namespace detail

inline void validate(const DroneParams& d) {
  using detail::require;
  require(d.mass > 0, "drone.mass", "mass > 0");
  require((d.inertia.array() > 0).all(), "drone.inertia", "inertia diagonal entries > 0");
  require(d.rotor_constant > 0, "drone.rotor_constant", "k_r > 0");
  require(d.rotor_inertia >= 0, "drone.rotor_inertia", "J_r >= 0");
  int pos = 0, neg = 0;
  for (double z : d.spin_directions) {
    require(z == 1.0 || z == -1.0, "drone.spin_directions", "each spin direction is +1 or -1");
    (z > 0 ? pos : neg)++;
  }
  require(pos == 2 && neg == 2, "drone.spin_directions", "exactly two spin directions of each sign");
  require(!d.thrust_poly.empty() && d.thrust_poly[0] == 0.0, "drone.thrust_poly",
          "thrust_poly(0) = 0");
  require(!d.torque_poly.empty(), "drone.torque_poly", "torque_poly non-empty");
  require(!d.motor_poly.empty(), "drone.motor_poly", "motor_poly non-empty");
  require(polyval(d.motor_poly, 0.0) >= 0.0, "drone.motor_poly", "motor_poly(0) >= 0");
  require(polyval(d.motor_poly, 1.0) > polyval(d.motor_poly, 0.0), "drone.motor_poly",
          "motor_poly increasing on [0, 1]");
  require((d.collision_half_extents.array() > 0).all(), "drone.collision_half_extents",
          "collision_half_extents all > 0");
}

inline void validate(const DragParams& d) {
  using detail::require;
  require(d.air_density > 0, "drag.air_density", "rho > 0");
  require(d.area_t >= 0 && d.area_r >= 0, "drag.area", "A_t, A_r >= 0");
  for (const Vec3* c : {&d.c0, &d.c1, &d.c2, &d.c3})
    require((c->array() >= 0).all(), "drag.c", "all drag coefficients >= 0");
}

inline void validate(const CameraParams& c) {
  using detail::require;
  require(c.width >= 1 && c.height >= 1, "camera.size", "width, height >= 1");
  require(c.hfov > 0 && c.hfov < kPi, "camera.hfov", "0 < hfov < pi");
  require(c.d_max > 0, "camera.d_max", "d_max > 0");
}

inline void validate(const RandomizationBounds& b) {
  using detail::require;
  for (int i = 0; i < 5; ++i)
    require(b.rel_pose_lo[static_cast<std::size_t>(i)] <= b.rel_pose_hi[static_cast<std::size_t>(i)],
            "bounds.rel_pose", "rel_pose lo <= hi component-wise");
  require(b.rel_pose_lo[2] > 0, "bounds.rel_pose", "rel_pose r bounds > 0");
  require(b.wp_size_range[0] > 0 && b.wp_size_range[0] <= b.wp_size_range[1], "bounds.wp_size_range",
          "0 < wp_size lo <= hi");
  require((b.init_wp_rpy_lo.array() <= b.init_wp_rpy_hi.array()).all(), "bounds.init_wp_rpy",
          "init_wp_rpy lo <= hi");
  require(b.n_wall >= 0 && b.n_tree >= 0 && b.n_orbit >= 0, "bounds.counts", "counts >= 0");
  require((b.wall_size_lo.array() > 0).all() && (b.wall_size_lo.array() <= b.wall_size_hi.array()).all(),
          "bounds.wall_size", "0 < wall_size lo <= hi");
  require(b.wall_jitter >= 0, "bounds.wall_jitter", "wall_jitter >= 0");
  const auto& t = b.tree;
  require(t.trunk_radius[0] > 0 && t.trunk_radius[0] <= t.trunk_radius[1], "bounds.tree.trunk_radius",
          "0 < lo <= hi");
  require(t.trunk_height[0] > 0 && t.trunk_height[0] <= t.trunk_height[1], "bounds.tree.trunk_height",
          "0 < lo <= hi");
  require(t.branch_count[0] >= 0 && t.branch_count[0] <= t.branch_count[1], "bounds.tree.branch_count",
          "0 <= lo <= hi");
  require(t.branch_length[0] > 0 && t.branch_length[0] <= t.branch_length[1],
          "bounds.tree.branch_length", "0 < lo <= hi");
  require(t.branch_radius_ratio > 0, "bounds.tree.branch_radius_ratio", "> 0");
  require(t.branch_tilt[0] <= t.branch_tilt[1], "bounds.tree.branch_tilt", "lo <= hi");
  const auto& o = b.orbit;
  require(o.radius[0] > 0 && o.radius[0] <= o.radius[1], "bounds.orbit.radius", "0 < lo <= hi");
  require(o.shape_size[0] > 0 && o.shape_size[0] <= o.shape_size[1], "bounds.orbit.shape_size",
          "0 < lo <= hi");
  require(b.n_orbit == 0 || !o.waypoints.empty(), "bounds.orbit.waypoints",
          "orbit waypoints listed when n_orbit > 0");
  for (int w : o.waypoints) require(w >= 0, "bounds.orbit.waypoints", "indices >= 0");
  require(b.bar_probability >= 0 && b.bar_probability <= 1, "bounds.bar_probability", "in [0, 1]");
  require(b.bar_thickness > 0, "bounds.bar_thickness", "> 0");
  require(b.clearance_margin >= 0, "bounds.clearance_margin", ">= 0");
  require((b.env_bounds.lo.array() < b.env_bounds.hi.array()).all(), "bounds.env_bounds",
          "env_bounds non-degenerate");
  require(b.max_track_retries >= 1 && b.max_placement_retries >= 1, "bounds.retries", ">= 1");
}

inline void validate(const RewardWeights& r) {
  using detail::require;
  for (double l : r.lambda) require(std::isfinite(l), "rewards.lambda", "finite");
  require(r.lambda[kCol] == 1.0 && r.lambda[kWp] == 1.0 && r.lambda[kTime] == 1.0, "rewards.lambda",
          "sparse weights (col, wp, time) = 1; magnitudes are post-weight");
  require(std::isfinite(r.collision_value) && r.collision_value < 0, "rewards.collision_value",
          "collision_value < 0");
  require(std::isfinite(r.waypoint_value) && r.waypoint_value > 0, "rewards.waypoint_value",
          "waypoint_value > 0");
  require(std::isfinite(r.timeout_value) && r.timeout_value <= 0, "rewards.timeout_value",
          "timeout_value <= 0");
  const auto& g = r.guidance;
  require(g.k0 > 0 && g.k1 > 0 && g.k2_front > 0 && g.k2_back > 0, "rewards.guidance",
          "k0, k1, k2 > 0");
  require(r.perception_coef < 0, "rewards.perception_coef", "perception_coef < 0");
  require(r.cmd_action_coef >= 0 && r.cmd_rate_coef >= 0, "rewards.cmd", "command coefficients >= 0");
  require(r.k3 <= 0 && r.k4 <= 0, "rewards.k3_k4", "k3, k4 <= 0");
}

inline void validate(const ControllerParams& c) {
  using detail::require;
  require((c.max_rate.array() > 0).all(), "controller.max_rate", "max rates > 0");
  require((c.center_rate.array() >= 0).all() && (c.center_rate.array() <= c.max_rate.array()).all(),
          "controller.center_rate", "0 <= center_rate <= max_rate");
  require((c.expo.array() >= 0).all() && (c.expo.array() <= 1).all(), "controller.expo", "expo in [0, 1]");
  require((c.kp.array() >= 0).all() && (c.ki.array() >= 0).all() && (c.kd.array() >= 0).all(),
          "controller.gains", "gains >= 0");
  require((c.integrator_limit.array() >= 0).all(), "controller.integrator_limit", ">= 0");
  require(c.mixer_idle >= 0 && c.mixer_idle < 1, "controller.mixer_idle", "in [0, 1)");
}

inline void validate(const ObsNormParams& o) {
  detail::require(o.p_max > 0 && o.v_max > 0 && o.omega_max > 0 && o.l_max > 0, "obs", "all > 0");
}

inline void validate(const InitParams& i) {
  using detail::require;
  require(i.spawn_offset >= 0 && i.spawn_length >= 0 && i.spawn_radius >= 0, "init.spawn", ">= 0");
  require(i.speed[0] >= 0 && i.speed[0] <= i.speed[1], "init.speed", "0 <= lo <= hi");
  require(i.body_rate_max >= 0 && i.attitude_angle_max >= 0, "init", "ranges >= 0");
  require((i.action_lo.array() >= -1).all() && (i.action_hi.array() <= 1).all() &&
              (i.action_lo.array() <= i.action_hi.array()).all(),
          "init.action", "-1 <= lo <= hi <= 1");
  require(i.camera_tilt[0] <= i.camera_tilt[1], "init.camera_tilt", "lo <= hi");
  require(i.eval_multiplier >= 1, "init.eval_multiplier", ">= 1");
}

inline void validate(const EnvConfig& c) {
  using detail::require;
  validate(c.drone);
  validate(c.drag);
  validate(c.camera);
  validate(c.bounds);
  validate(c.rewards);
  validate(c.controller);
  validate(c.obs);
  validate(c.init);
  require(c.physics_hz > 0 && c.control_hz > 0 && c.substeps >= 1, "rates", "positive rates");
  require(c.physics_hz == c.control_hz * c.substeps, "rates", "physics_hz = control_hz * substeps");
  require(c.episode_time_limit > 0, "episode_time_limit", "episode_time_limit > 0");
  require(c.n_waypoints_per_segment >= 3, "n_waypoints_per_segment", "n_waypoints_per_segment >= 3");
  require(c.gravity >= 0, "gravity", "gravity >= 0");
}

// ---------------------------------------------------------------------------

// Obstacle counts and relative-pose bounds of the four evaluation levels.
inline RandomizationBounds difficulty_preset(int level) {
  if (level < 1 || level > 4)
    throw ValidationError("level: difficulty level must be in 1..4, got " + std::to_string(level));
  RandomizationBounds b;
  b.rel_pose_lo = {-0.3, -0.3, 6.0, 0.0, 0.0};
  b.rel_pose_hi = {0.3, 0.3, 18.0, 3.14, 0.2};
  b.n_wall = 12;
  b.n_tree = 4;
  b.n_orbit = 0;
  if (level >= 2) {
    b.n_wall = 24;
    b.n_tree = 8;
  }
  if (level >= 3) {
    b.n_orbit = 60;
    b.orbit.waypoints = {0, 1};
  }
  if (level >= 4) {
    b.rel_pose_lo = {-1.0, -0.4, 6.0, 0.0, 0.0};
    b.rel_pose_hi = {1.0, 0.4, 18.0, 3.14, 0.3};
  }
  return b;
}

inline EnvConfig config_from_json(const json& j) {
  auto cfg = from_json<EnvConfig>(j);
  validate(cfg);
  return cfg;
}

inline EnvConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline EnvConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const EnvConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

inline void save_config(const EnvConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config file: " + path);
  out << dump_config(cfg);
}

inline constexpr const char* kSeedEnvVar = "RACESIM_SEED";

// Applies RACESIM_SEED when set. Returns true if the seed was overridden.
inline bool apply_seed_override(EnvConfig& cfg) {
  const char* s = std::getenv(kSeedEnvVar);
  if (s == nullptr || *s == '\0') return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0') throw ParseError(std::string(kSeedEnvVar) + ": not an unsigned integer");
  cfg.seed = static_cast<std::uint64_t>(v);
  return true;
}

}  // namespace racesim
