#pragma once

// Racing POMDP. One step holds the action for `substeps` physics steps,
// checks collision after every physics step, then checks the waypoint plane
// crossing on the control-rate segment and the time limit.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "racesim/config.hpp"
#include "racesim/controller.hpp"
#include "racesim/dynamics.hpp"
#include "racesim/errors.hpp"
#include "racesim/geometry.hpp"
#include "racesim/parallel.hpp"
#include "racesim/reward.hpp"
#include "racesim/rng.hpp"
#include "racesim/sensors.hpp"
#include "racesim/track.hpp"

namespace racesim {

enum class Cause { kRunning, kSuccess, kCollision, kOutOfBounds, kWrongSide, kTimeout };

inline const char* to_string(Cause c) {
  switch (c) {
    case Cause::kRunning: return "running";
    case Cause::kSuccess: return "success";
    case Cause::kCollision: return "collision";
    case Cause::kOutOfBounds: return "out_of_bounds";
    case Cause::kWrongSide: return "wrong_side";
    case Cause::kTimeout: return "timeout";
  }
  return "?";
}

inline Cause cause_from_string(const std::string& s) {
  for (Cause c : {Cause::kRunning, Cause::kSuccess, Cause::kCollision, Cause::kOutOfBounds, Cause::kWrongSide,
                  Cause::kTimeout})
    if (s == to_string(c)) return c;
  throw ParseError("unknown termination cause: " + s);
}

// Failure causes that take the collision reward.
inline bool is_crash(Cause c) { return c == Cause::kCollision || c == Cause::kOutOfBounds || c == Cause::kWrongSide; }

struct StepInfo {
  double speed = 0.0;           // |v|, m/s
  double angular_speed = 0.0;   // |w|, rad/s
  double safety_margin = kInf;  // drone center to nearest non-bar obstacle, m
  double motor_command = 0.0;   // mean over motors and substeps
  int target_index = 1;
  int steps = 0;
  double elapsed = 0.0;
  int hit_index = -1;  // index into obstacles, then bars, on collision
  bool action_clamped = false;
  bool passed = false;
  bool reset = false;  // result comes from an automatic reset
};

struct StepResult {
  ObservationBundle obs;
  RewardBreakdown reward;
  bool terminated = false;
  Cause cause = Cause::kRunning;
  StepInfo info;
};

// Wall-clock seconds spent per stage; filled only when profiling is on.
struct StageTimes {
  double physics = 0.0;
  double render = 0.0;
  double other = 0.0;  // rewards, state/waypoint observations, resets

  StageTimes& operator+=(const StageTimes& o) {
    physics += o.physics;
    render += o.render;
    other += o.other;
    return *this;
  }
};

struct EnvState {
  RigidBodyState body;
  RotorState rotors;
  RateControllerState controller;
  Course course;
  std::vector<Obstacle> bars;
  std::vector<Waypoint> obs_waypoints;  // track waypoints plus padding
  int target_index = 1;
  Vec4 prev_action = Vec4::Zero();
  double prev_dist = 0.0;
  int steps = 0;
  double elapsed = 0.0;
  CameraParams camera;
  Vec3 p0 = Vec3::Zero();
  bool terminated = false;
  Cause cause = Cause::kRunning;
};

struct ResetOptions {
  bool fresh_track = true;
  std::optional<Course> track_override;
};

// Index of the first obstacle (then bar) overlapping the box.
inline std::optional<std::size_t> check_collision(const OrientedBox& box, const std::vector<Obstacle>& obstacles,
                                                  const std::vector<Obstacle>& bars) {
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (overlaps(box, obstacles[i])) return i;
  for (std::size_t i = 0; i < bars.size(); ++i)
    if (overlaps(box, bars[i])) return obstacles.size() + i;
  return std::nullopt;
}

inline double nearest_obstacle_distance(const Vec3& p, const std::vector<Obstacle>& obstacles) {
  double best = kInf;
  for (const auto& ob : obstacles)
    if (ob.category != ObstacleCategory::kBar) best = std::min(best, point_distance(ob, p));
  return best;
}

// Waypoints used for observations. Tracks whose final scored waypoint is the
// last one get a virtual waypoint continuing straight ahead.
inline std::vector<Waypoint> padded_waypoints(const TrackSpec& t) {
  std::vector<Waypoint> out = t.waypoints;
  if (static_cast<int>(out.size()) > t.final_index + 1) return out;
  Waypoint pad = out.back();
  const double spacing = out.size() >= 2 ? (out.back().position - out[out.size() - 2].position).norm() : 8.0;
  pad.position += pad.axis() * (spacing > 0.0 ? spacing : 8.0);
  pad.bars = false;
  out.push_back(pad);
  return out;
}

inline int max_episode_steps(const EnvConfig& cfg) {
  return static_cast<int>(std::ceil(cfg.episode_time_limit / cfg.control_dt() - 1e-9));
}

inline Vec3 random_unit_vector(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double n2 = v.squaredNorm();
    if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
  }
}

class Env {
 public:
  // The env's seed is derived from (config seed, env_index), so an env at
  // batch position i behaves like a scalar env constructed with index i.
  explicit Env(EnvConfig cfg, std::uint64_t env_index = 0) : cfg_(std::move(cfg)) {
    validate(cfg_);
    seed(derive_seed({cfg_.seed, env_index}));
  }

  void seed(std::uint64_t s) {
    base_seed_ = s;
    episode_ = 0;
    has_course_ = false;
  }

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t episode() const { return episode_; }
  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return st_; }
  int max_steps() const { return max_episode_steps(cfg_); }

  void set_profiling(bool on) { profile_ = on; }
  const StageTimes& stage_times() const { return times_; }

  ObservationBundle reset(const ResetOptions& opt = {}) {
    rng_ = Rng(derive_seed({base_seed_, episode_}));
    ++episode_;
    if (opt.track_override) {
      set_course(*opt.track_override);
    } else if (opt.fresh_track || !has_course_) {
      set_course(generate_course(cfg_.bounds, cfg_.init, cfg_.n_waypoints_per_segment, rng_));
    }
    init_agent();
    return observe();
  }

  StepResult step(const Vec4& action) {
    if (st_.terminated) {
      if (!cfg_.auto_reset) throw ContractViolation("step called on a terminated env; call reset first");
      const auto t0 = now();
      StepResult r;
      r.obs = reset();
      if (profile_) times_.other += seconds(t0, now()) - last_render_;
      r.info = base_info();
      r.info.reset = true;
      return r;
    }
    if (!action.allFinite()) throw ContractViolation("step: non-finite action");
    const auto t_start = now();
    const ControlCommand cmd(action);
    StepResult r;
    r.info.action_clamped = (cmd.a != action);

    const double dt = cfg_.physics_dt();
    const Vec3 p_prev = st_.body.p;
    Cause cause = Cause::kRunning;
    double motor_sum = 0.0;
    int substeps_run = 0;
    RateController ctrl{st_.controller};
    for (int k = 0; k < cfg_.substeps; ++k) {
      const MotorCommand u = ctrl.update(cmd, st_.body.w, cfg_.controller, dt);
      motor_sum += u.u.mean();
      ++substeps_run;
      st_.rotors.omega_s = motor_steady_state(u, cfg_.drone);
      const auto [rotors_next, rotor_accel] = rotor_step(st_.rotors, cfg_.drone.rotor_constant, dt);
      const Wrench w = actuator_wrench(st_.rotors, rotor_accel, cfg_.drone) +
                       drag_wrench(st_.body.body_velocity(), st_.body.w, cfg_.drag);
      st_.rotors = rotors_next;
      st_.body = rigid_body_step(st_.body, w, cfg_.drone, cfg_.gravity, dt);
      if (!st_.body.finite()) throw ModelError("step: non-finite drone state");
      const OrientedBox box = oriented_collision_box(st_.body, cfg_.drone);
      if (auto hit = check_collision(box, st_.course.obstacles, st_.bars)) {
        cause = Cause::kCollision;
        r.info.hit_index = static_cast<int>(*hit);
        break;
      }
      if (box_outside_bounds(box, st_.course.track.env_bounds.lo, st_.course.track.env_bounds.hi)) {
        cause = Cause::kOutOfBounds;
        break;
      }
    }
    st_.controller = ctrl.state;
    const auto t_physics = now();

    const Waypoint& target = st_.obs_waypoints[static_cast<std::size_t>(st_.target_index)];
    const double dist_cur = (st_.body.p - target.position).norm();
    const double prog = progress_reward(st_.prev_dist, dist_cur);
    bool passed = false;
    if (cause == Cause::kRunning) {
      switch (waypoint_crossing(p_prev, st_.body.p, target)) {
        case Crossing::kPassed:
          passed = true;
          if (st_.target_index >= st_.course.track.final_index) cause = Cause::kSuccess;
          else ++st_.target_index;
          break;
        case Crossing::kWrongSide: cause = Cause::kWrongSide; break;
        case Crossing::kNone: break;
      }
    }
    ++st_.steps;
    st_.elapsed = st_.steps * cfg_.control_dt();
    if (cause == Cause::kRunning && st_.steps >= max_steps()) cause = Cause::kTimeout;

    const Waypoint& next = st_.obs_waypoints[static_cast<std::size_t>(st_.target_index)];
    DenseTerms dense;
    dense.prog = prog;
    const CameraPose cam = camera_pose(st_.body, st_.camera);
    const Vec3 to_wp = next.position - cam.position;
    dense.prec = to_wp.norm() > 0.0
                     ? perception_reward(cam.optical_axis(), to_wp.normalized(), cfg_.rewards.perception_coef)
                     : 0.0;
    dense.cmd = command_reward(cmd.a, st_.prev_action, st_.body.w, cfg_.rewards.cmd_action_coef,
                               cfg_.rewards.cmd_rate_coef);
    dense.guid = guidance_reward(next.to_local(st_.body.p), next.width, next.height, cfg_.rewards.guidance);
    dense.vel = velocity_reward(st_.body.body_velocity(), cfg_.rewards.k3, cfg_.rewards.k4);
    RewardEvents ev;
    ev.collided = is_crash(cause);
    ev.passed_wp = passed;
    ev.timed_out = cause == Cause::kTimeout;
    r.reward = total_reward(ev, dense, cfg_.rewards);

    st_.prev_action = cmd.a;
    st_.prev_dist = (st_.body.p - next.position).norm();
    st_.terminated = cause != Cause::kRunning;
    st_.cause = cause;

    r.obs = observe();
    r.terminated = st_.terminated;
    r.cause = cause;
    const StepInfo base = base_info();
    r.info.speed = base.speed;
    r.info.angular_speed = base.angular_speed;
    r.info.safety_margin = base.safety_margin;
    r.info.target_index = base.target_index;
    r.info.steps = base.steps;
    r.info.elapsed = base.elapsed;
    r.info.motor_command = motor_sum / substeps_run;
    r.info.passed = passed;
    if (profile_) {
      const double total = seconds(t_start, now());
      const double physics = seconds(t_start, t_physics);
      times_.physics += physics;
      times_.other += total - physics - last_render_;
    }
    return r;
  }

  ObservationBundle observe() const {
    ObservationBundle o;
    last_render_ = 0.0;
    if (cfg_.depth_enabled) {
      const auto t0 = now();
      const Scene scene{st_.course.obstacles, st_.bars, st_.course.track.env_bounds};
      o.depth = render_depth(camera_pose(st_.body, st_.camera), st_.camera, scene);
      if (profile_) {
        last_render_ = seconds(t0, now());
        times_.render += last_render_;
      }
    }
    o.state = build_state_obs(st_.body, st_.p0, cfg_.obs);
    const auto t = static_cast<std::size_t>(st_.target_index);
    o.waypoints = build_waypoint_obs(st_.body, st_.obs_waypoints[t], st_.obs_waypoints[t + 1], cfg_.obs.l_max);
    o.prev_action = st_.prev_action;
    return o;
  }

 private:
  using Clock = std::chrono::steady_clock;

  Clock::time_point now() const { return profile_ ? Clock::now() : Clock::time_point{}; }
  static double seconds(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

  void set_course(Course c) {
    const auto n = static_cast<int>(c.track.waypoints.size());
    if (n < 2) throw ValidationError("course: need at least 2 waypoints");
    if (c.track.final_index < 1 || c.track.final_index >= n)
      throw ValidationError("course: final_index must be in [1, " + std::to_string(n) + ")");
    st_.course = std::move(c);
    st_.bars.clear();
    for (const auto& wp : st_.course.track.waypoints) {
      auto b = gate_bars(wp, cfg_.bounds.bar_thickness);
      st_.bars.insert(st_.bars.end(), b.begin(), b.end());
    }
    st_.obs_waypoints = padded_waypoints(st_.course.track);
    has_course_ = true;
  }

  void init_agent() {
    const InitParams& ip = cfg_.init;
    const double mult = cfg_.eval_mode ? ip.eval_multiplier : 1.0;
    const auto& wps = st_.course.track.waypoints;
    const Waypoint& wp0 = wps[0];

    st_.camera = cfg_.camera;
    st_.camera.mount_position.y() += rng_.uniform(ip.camera_y_offset[0], ip.camera_y_offset[1]);
    st_.camera.mount_position.z() += rng_.uniform(ip.camera_z_offset[0], ip.camera_z_offset[1]);
    st_.camera.tilt_angle = rng_.uniform(ip.camera_tilt[0], ip.camera_tilt[1]);

    const Vec3 local(rng_.uniform(-(ip.spawn_offset + ip.spawn_length), -ip.spawn_offset),
                     rng_.uniform(-ip.spawn_radius, ip.spawn_radius), rng_.uniform(-ip.spawn_radius, ip.spawn_radius));
    RigidBodyState body;
    body.p = wp0.position + wp0.orientation * local;
    if (rng_.bernoulli(0.5)) {
      body.q = wp0.orientation;
    } else {
      const Vec3 dir = wps[1].position - wp0.position;
      const double angle = rng_.uniform(-ip.attitude_angle_max * mult, ip.attitude_angle_max * mult);
      const Mat3 aligned = Eigen::AngleAxisd(angle, dir.normalized()).toRotationMatrix() * frame_from_forward(dir);
      body.q = Quat(aligned).normalized();
    }
    const double speed = rng_.uniform(ip.speed[0] * mult, ip.speed[1] * mult);
    body.v = speed * random_unit_vector(rng_);
    const double w_max = ip.body_rate_max * mult;
    body.w = Vec3(rng_.uniform(-w_max, w_max), rng_.uniform(-w_max, w_max), rng_.uniform(-w_max, w_max));
    st_.body = body;

    Vec4 a;
    for (int i = 0; i < 4; ++i) {
      const double mid = 0.5 * (ip.action_lo[i] + ip.action_hi[i]);
      const double half = 0.5 * (ip.action_hi[i] - ip.action_lo[i]) * mult;
      a[i] = clamp_unit(rng_.uniform(mid - half, mid + half));
    }
    st_.prev_action = a;

    const double hover = hover_rotor_speed(cfg_.drone, cfg_.gravity);
    st_.rotors.omega = Vec4::Constant(hover);
    st_.rotors.omega_s = Vec4::Constant(hover);
    st_.controller = RateControllerState{};
    st_.target_index = 1;
    st_.prev_dist = (body.p - st_.obs_waypoints[1].position).norm();
    st_.steps = 0;
    st_.elapsed = 0.0;
    st_.p0 = body.p;
    st_.terminated = false;
    st_.cause = Cause::kRunning;
  }

  StepInfo base_info() const {
    StepInfo i;
    i.speed = st_.body.v.norm();
    i.angular_speed = st_.body.w.norm();
    i.safety_margin = nearest_obstacle_distance(st_.body.p, st_.course.obstacles);
    i.target_index = st_.target_index;
    i.steps = st_.steps;
    i.elapsed = st_.elapsed;
    return i;
  }

  EnvConfig cfg_;
  EnvState st_;
  Rng rng_;
  std::uint64_t base_seed_ = 0;
  std::uint64_t episode_ = 0;
  bool has_course_ = false;
  bool profile_ = false;
  mutable StageTimes times_;
  mutable double last_render_ = 0.0;
};

// N independent envs advanced together. Env i is seeded from (config seed, i)
// so results do not depend on batch size, order, or worker count.
class BatchEnv {
 public:
  BatchEnv(const EnvConfig& cfg, std::size_t n, std::size_t workers = 1) : pool_(workers) {
    envs_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) envs_.emplace_back(cfg, i);
  }

  std::size_t size() const { return envs_.size(); }
  std::size_t workers() const { return pool_.size(); }
  Env& env(std::size_t i) { return envs_.at(i); }
  const Env& env(std::size_t i) const { return envs_.at(i); }

  void seed(std::uint64_t global_seed) {
    for (std::size_t i = 0; i < envs_.size(); ++i) envs_[i].seed(derive_seed({global_seed, i}));
  }

  std::vector<ObservationBundle> reset(const ResetOptions& opt = {}) {
    std::vector<ObservationBundle> out(envs_.size());
    pool_.run(envs_.size(), [&](std::size_t i) { out[i] = envs_[i].reset(opt); });
    return out;
  }

  std::vector<StepResult> step(const std::vector<Vec4>& actions) {
    if (actions.size() != envs_.size())
      throw ContractViolation("batch step: got " + std::to_string(actions.size()) + " actions for " +
                              std::to_string(envs_.size()) + " envs");
    std::vector<StepResult> out(envs_.size());
    pool_.run(envs_.size(), [&](std::size_t i) { out[i] = envs_[i].step(actions[i]); });
    return out;
  }

 private:
  std::vector<Env> envs_;
  WorkerPool pool_;
};

}  // namespace racesim
