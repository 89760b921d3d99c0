#pragma once

// Episode runner, scripted policies, trajectory logs, evaluation metrics and
// the throughput benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "racesim/config.hpp"
#include "racesim/env.hpp"
#include "racesim/parallel.hpp"
#include "racesim/track.hpp"

namespace racesim {

// ---------------------------------------------------------------------------
// Policies. A policy sees the env (privileged state for scripted policies) and
// the latest observation and returns raw sticks; the env clamps them.

using Policy = std::function<Vec4(const Env& env, const ObservationBundle& obs)>;
using PolicyFactory = std::function<Policy(std::uint64_t seed)>;

struct ScriptedGuidanceParams {
  double cruise_speed = 5.0;   // m/s
  double k_velocity = 2.0;     // 1/s
  double k_attitude = 8.0;     // 1/s
  double max_tilt = 0.9;       // rad
  double max_rate = 8.0;       // rad/s
  double approach_gain = 0.5;  // aim point moves this fraction toward the gate axis
  double lead = 2.0;           // aim this far beyond the gate once close, m
};

// Geometric guidance toward the target waypoint: aim at a point on the gate
// axis, track a cruise velocity with a thrust vector, point body x at the aim
// point, and turn the attitude error into body-rate sticks.
inline ControlCommand scripted_guidance_policy(const RigidBodyState& s, const Waypoint& target, const EnvConfig& cfg,
                                               const ScriptedGuidanceParams& sp = {}) {
  const Vec3 axis = target.axis();
  const Vec3 local = target.to_local(s.p);
  Vec3 aim;
  if (local.x() < -sp.lead) aim = target.position + axis * (sp.approach_gain * local.x());
  else aim = target.position + axis * sp.lead;
  Vec3 to_aim = aim - s.p;
  if (to_aim.norm() < 1e-6) to_aim = axis;
  const Vec3 v_des = sp.cruise_speed * to_aim.normalized();

  const Mat3 r = s.rotation();
  const Vec3 drag_world = r * drag_wrench(s.body_velocity(), Vec3::Zero(), cfg.drag).f;
  Vec3 a_des = sp.k_velocity * (v_des - s.v) + Vec3(0, 0, cfg.gravity) - drag_world / cfg.drone.mass;
  // Limit the tilt of the thrust vector.
  a_des.z() = std::max(a_des.z(), 0.2 * cfg.gravity);
  const double horiz = a_des.head<2>().norm();
  const double horiz_max = a_des.z() * std::tan(sp.max_tilt);
  if (horiz > horiz_max) a_des.head<2>() *= horiz_max / horiz;

  const Vec3 z_des = a_des.normalized();
  Vec3 x_des = to_aim - to_aim.dot(z_des) * z_des;
  if (x_des.norm() < 1e-6) x_des = r.col(0) - r.col(0).dot(z_des) * z_des;
  x_des.normalize();
  Mat3 r_des;
  r_des.col(0) = x_des;
  r_des.col(1) = z_des.cross(x_des);
  r_des.col(2) = z_des;

  const Eigen::AngleAxisd err(r.transpose() * r_des);
  const Vec3 w_des = (sp.k_attitude * err.angle() * err.axis()).cwiseMax(-sp.max_rate).cwiseMin(sp.max_rate);
  const double thrust = cfg.drone.mass * std::max(a_des.dot(r.col(2)), 0.0);
  ControlCommand cmd;
  for (int i = 0; i < 3; ++i) cmd.a[i] = inverse_rate(w_des[i], i, cfg.controller);
  cmd.a[3] = throttle_for_thrust(thrust, cfg.drone);
  return cmd;
}

inline Policy make_scripted_policy(ScriptedGuidanceParams sp = {}) {
  return [sp](const Env& env, const ObservationBundle&) {
    const auto& st = env.state();
    const Waypoint& target = st.obs_waypoints[static_cast<std::size_t>(st.target_index)];
    return scripted_guidance_policy(st.body, target, env.config(), sp).a;
  };
}

// Zero rates at the hover throttle.
inline Policy make_hover_policy() {
  return [](const Env& env, const ObservationBundle&) {
    return Vec4(0, 0, 0, hover_throttle(env.config().drone, env.config().gravity));
  };
}

// Uniform sticks in [-1, 1]^4 from its own seeded stream.
inline Policy make_random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const Env&, const ObservationBundle&) {
    return Vec4(rng->uniform(-1, 1), rng->uniform(-1, 1), rng->uniform(-1, 1), rng->uniform(-1, 1));
  };
}

inline const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names{"scripted", "hover", "random"};
  return names;
}

inline PolicyFactory policy_factory(const std::string& name) {
  if (name == "scripted") return [](std::uint64_t) { return make_scripted_policy(); };
  if (name == "hover") return [](std::uint64_t) { return make_hover_policy(); };
  if (name == "random") return [](std::uint64_t seed) { return make_random_policy(seed); };
  throw ValidationError("unknown policy: " + name);
}

// ---------------------------------------------------------------------------
// Trajectory logs.

struct TrajectoryStep {
  double t = 0.0;
  RigidBodyState body;
  Vec4 action = Vec4::Zero();  // as applied (after clamping)
  RewardBreakdown reward;
  int target_index = 1;
  double min_obstacle_distance = kInf;
  double motor_command = 0.0;
  double speed = 0.0;
  double angular_speed = 0.0;
};

struct TrajectoryLog {
  int track_id = 0;
  int episode = 0;
  std::uint64_t seed = 0;
  std::string track_ref;
  RigidBodyState initial;
  std::vector<TrajectoryStep> steps;
  Cause cause = Cause::kRunning;
  int clamped_actions = 0;
};

// Straight obstacle-free track along +x: n waypoints of the given size,
// `spacing` apart, all of them scored.
inline Course make_straight_course(int n, double spacing, double size, const Bounds3& env_bounds = {}) {
  Course c;
  for (int i = 0; i < n; ++i) {
    Waypoint wp;
    wp.position = Vec3(spacing * i, 0.0, 0.0);
    wp.width = size;
    wp.height = size;
    c.track.waypoints.push_back(wp);
  }
  c.track.final_index = n - 1;
  c.track.env_bounds = env_bounds;
  return c;
}

inline TrajectoryLog run_episode(Env& env, const Policy& policy, const ResetOptions& opt = {}) {
  TrajectoryLog log;
  log.seed = env.base_seed();
  ObservationBundle obs = env.reset(opt);
  log.initial = env.state().body;
  for (;;) {
    const Vec4 raw = policy(env, obs);
    StepResult r = env.step(raw);
    const auto& st = env.state();
    TrajectoryStep rec;
    rec.t = r.info.elapsed;
    rec.body = st.body;
    rec.action = st.prev_action;
    rec.reward = r.reward;
    rec.target_index = r.info.target_index;
    rec.min_obstacle_distance = r.info.safety_margin;
    rec.motor_command = r.info.motor_command;
    rec.speed = r.info.speed;
    rec.angular_speed = r.info.angular_speed;
    log.steps.push_back(rec);
    if (r.info.action_clamped) ++log.clamped_actions;
    if (r.terminated) {
      log.cause = r.cause;
      break;
    }
    obs = std::move(r.obs);
  }
  return log;
}

// Episode (track i, episode e) runs in its own env seeded from
// (config seed, i, e), so logs are independent of the worker count. Logs are
// ordered by (track, episode).
inline std::vector<TrajectoryLog> run_episodes(const EnvConfig& cfg, const std::vector<Course>& tracks,
                                               const PolicyFactory& make_policy, int episodes_per_track,
                                               std::size_t workers = 1, const std::string& track_ref = "") {
  if (episodes_per_track < 0) throw ValidationError("episodes_per_track must be >= 0");
  const std::size_t per = static_cast<std::size_t>(episodes_per_track);
  std::vector<TrajectoryLog> logs(tracks.size() * per);
  WorkerPool pool(workers);
  pool.run(logs.size(), [&](std::size_t k) {
    const std::size_t i = k / per, e = k % per;
    const std::uint64_t seed = derive_seed({cfg.seed, i, e});
    Env env(cfg);
    env.seed(seed);
    ResetOptions opt;
    opt.track_override = tracks[i];
    TrajectoryLog log = run_episode(env, make_policy(derive_seed({seed, 1})), opt);
    log.track_id = static_cast<int>(i);
    log.episode = static_cast<int>(e);
    log.track_ref = track_ref;
    logs[k] = std::move(log);
  });
  return logs;
}

// Tracks generated from the config's randomization bounds; track i uses the
// stream (config seed, "track", i).
inline std::vector<Course> generate_courses(const EnvConfig& cfg, int n_tracks, int level = 0) {
  std::vector<Course> out;
  for (int i = 0; i < n_tracks; ++i) {
    const std::uint64_t seed = derive_seed({cfg.seed, 0x747261636bULL, static_cast<std::uint64_t>(i)});
    Rng rng(seed);
    Course c = generate_course(cfg.bounds, cfg.init, cfg.n_waypoints_per_segment, rng, level);
    c.track.seed = seed;
    out.push_back(std::move(c));
  }
  return out;
}

// Newline-delimited JSON. Each episode is an `episode_begin` record, one
// `step` record per env step and an `episode_end` record.
inline constexpr int kTrajectoryVersion = 1;

namespace detail {

inline json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_or_inf(const json& j) { return j.is_null() ? kInf : j.get<double>(); }

inline json body_json(const RigidBodyState& b) {
  return {{"p", vec_json(b.p)},
          {"q", json::array({b.q.w(), b.q.x(), b.q.y(), b.q.z()})},
          {"v", vec_json(b.v)},
          {"w", vec_json(b.w)}};
}

inline Vec3 vec3_of(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

inline RigidBodyState body_of(const json& j) {
  RigidBodyState b;
  b.p = vec3_of(j.at("p"));
  const auto& q = j.at("q");
  b.q = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
  b.v = vec3_of(j.at("v"));
  b.w = vec3_of(j.at("w"));
  return b;
}

inline json reward_json(const RewardBreakdown& r) {
  json j;
  const auto t = r.terms();
  for (std::size_t i = 0; i < t.size(); ++i) j[kRewardTermNames[i]] = t[i];
  j["total"] = r.total;
  return j;
}

inline RewardBreakdown reward_of(const json& j) {
  RewardBreakdown r;
  r.r_prog = j.at("prog").get<double>();
  r.r_prec = j.at("prec").get<double>();
  r.r_cmd = j.at("cmd").get<double>();
  r.r_col = j.at("col").get<double>();
  r.r_guid = j.at("guid").get<double>();
  r.r_wp = j.at("wp").get<double>();
  r.r_time = j.at("time").get<double>();
  r.r_vel = j.at("vel").get<double>();
  r.total = j.at("total").get<double>();
  return r;
}

}  // namespace detail

inline void write_trajectory_log(std::ostream& out, const TrajectoryLog& log) {
  json begin{{"type", "episode_begin"}, {"version", kTrajectoryVersion}, {"track_id", log.track_id},
             {"episode", log.episode},   {"seed", log.seed},                {"track", log.track_ref},
             {"initial", detail::body_json(log.initial)}};
  out << begin.dump() << "\n";
  for (const auto& s : log.steps) {
    json j = detail::body_json(s.body);
    j["type"] = "step";
    j["track_id"] = log.track_id;
    j["episode"] = log.episode;
    j["t"] = s.t;
    j["action"] = detail::vec_json(s.action);
    j["reward"] = detail::reward_json(s.reward);
    j["target"] = s.target_index;
    j["min_obstacle_distance"] = detail::finite_or_null(s.min_obstacle_distance);
    j["motor_command"] = s.motor_command;
    j["speed"] = s.speed;
    j["angular_speed"] = s.angular_speed;
    out << j.dump() << "\n";
  }
  json end{{"type", "episode_end"},          {"track_id", log.track_id},    {"episode", log.episode},
           {"cause", to_string(log.cause)}, {"steps", log.steps.size()}, {"clamped_actions", log.clamped_actions}};
  out << end.dump() << "\n";
}

inline void write_trajectory_logs(std::ostream& out, const std::vector<TrajectoryLog>& logs) {
  for (const auto& l : logs) write_trajectory_log(out, l);
}

inline std::vector<TrajectoryLog> read_trajectory_logs(std::istream& in) {
  std::vector<TrajectoryLog> logs;
  TrajectoryLog* cur = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "trajectory line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "episode_begin") {
        if (j.at("version").get<int>() != kTrajectoryVersion) throw ParseError("unsupported version");
        logs.emplace_back();
        cur = &logs.back();
        cur->track_id = j.at("track_id").get<int>();
        cur->episode = j.at("episode").get<int>();
        cur->seed = j.at("seed").get<std::uint64_t>();
        cur->track_ref = j.at("track").get<std::string>();
        cur->initial = detail::body_of(j.at("initial"));
      } else if (type == "step") {
        if (!cur) throw ParseError("step before episode_begin");
        TrajectoryStep s;
        s.t = j.at("t").get<double>();
        s.body = detail::body_of(j);
        const auto& a = j.at("action");
        s.action = Vec4(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(), a.at(3).get<double>());
        s.reward = detail::reward_of(j.at("reward"));
        s.target_index = j.at("target").get<int>();
        s.min_obstacle_distance = detail::number_or_inf(j.at("min_obstacle_distance"));
        s.motor_command = j.at("motor_command").get<double>();
        s.speed = j.at("speed").get<double>();
        s.angular_speed = j.at("angular_speed").get<double>();
        cur->steps.push_back(s);
      } else if (type == "episode_end") {
        if (!cur) throw ParseError("episode_end before episode_begin");
        cur->cause = cause_from_string(j.at("cause").get<std::string>());
        cur->clamped_actions = j.at("clamped_actions").get<int>();
        cur = nullptr;
      } else {
        throw ParseError("unknown record type " + type);
      }
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
  }
  if (cur) throw ParseError("trajectory log ends inside an episode");
  return logs;
}

// ---------------------------------------------------------------------------
// Metrics.

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

// Linear-interpolation quantiles of the given values.
inline Summary summarize(std::vector<double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  s.min = xs.front();
  s.q25 = q(0.25);
  s.median = q(0.5);
  s.q75 = q(0.75);
  s.max = xs.back();
  return s;
}

struct EpisodeMetrics {
  Cause cause = Cause::kRunning;
  double safety_margin = kInf;  // 0 for collisions, inf with no obstacles
  double mean_motor_command = 0.0;
  double max_motor_command = 0.0;
  double mean_speed = 0.0;
  double max_speed = 0.0;
  double mean_angular_speed = 0.0;
  double max_angular_speed = 0.0;
  double duration = 0.0;
};

struct Metrics {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::map<std::string, std::size_t> causes;
  // Episodes without any obstacle have no margin and are left out.
  Summary safety_margin;
  Summary mean_motor_command;
  Summary max_motor_command;
  Summary mean_speed;
  Summary max_speed;
  Summary mean_angular_speed;
  Summary max_angular_speed;
  std::vector<EpisodeMetrics> per_episode;
};

inline EpisodeMetrics episode_metrics(const TrajectoryLog& log) {
  EpisodeMetrics m;
  m.cause = log.cause;
  const auto n = static_cast<double>(std::max<std::size_t>(log.steps.size(), 1));
  for (const auto& s : log.steps) {
    m.safety_margin = std::min(m.safety_margin, s.min_obstacle_distance);
    m.mean_motor_command += s.motor_command / n;
    m.max_motor_command = std::max(m.max_motor_command, s.motor_command);
    m.mean_speed += s.speed / n;
    m.max_speed = std::max(m.max_speed, s.speed);
    m.mean_angular_speed += s.angular_speed / n;
    m.max_angular_speed = std::max(m.max_angular_speed, s.angular_speed);
  }
  if (log.cause == Cause::kCollision) m.safety_margin = 0.0;
  if (!log.steps.empty()) m.duration = log.steps.back().t;
  return m;
}

inline Metrics compute_metrics(const std::vector<TrajectoryLog>& logs) {
  if (logs.empty()) throw ValidationError("compute_metrics: no episodes");
  Metrics m;
  m.episodes = logs.size();
  std::vector<double> margin, mmc, xmc, ms, xs, mw, xw;
  for (const auto& log : logs) {
    const EpisodeMetrics e = episode_metrics(log);
    m.per_episode.push_back(e);
    ++m.causes[to_string(e.cause)];
    if (e.cause == Cause::kSuccess) ++m.successes;
    if (std::isfinite(e.safety_margin)) margin.push_back(e.safety_margin);
    mmc.push_back(e.mean_motor_command);
    xmc.push_back(e.max_motor_command);
    ms.push_back(e.mean_speed);
    xs.push_back(e.max_speed);
    mw.push_back(e.mean_angular_speed);
    xw.push_back(e.max_angular_speed);
  }
  m.success_rate = static_cast<double>(m.successes) / static_cast<double>(m.episodes);
  m.safety_margin = summarize(margin);
  m.mean_motor_command = summarize(mmc);
  m.max_motor_command = summarize(xmc);
  m.mean_speed = summarize(ms);
  m.max_speed = summarize(xs);
  m.mean_angular_speed = summarize(mw);
  m.max_angular_speed = summarize(xw);
  return m;
}

inline constexpr int kMetricsVersion = 1;

inline json summary_json(const Summary& s) {
  return {{"n", s.n},       {"mean", s.mean}, {"min", s.min}, {"q25", s.q25},
          {"median", s.median}, {"q75", s.q75},  {"max", s.max}};
}

inline json metrics_json(const Metrics& m) {
  json causes = json::object();
  for (const auto& [k, v] : m.causes) causes[k] = v;
  return {{"format", "racesim-metrics"},
          {"version", kMetricsVersion},
          {"episodes", m.episodes},
          {"successes", m.successes},
          {"success_rate", m.success_rate},
          {"causes", causes},
          {"safety_margin", summary_json(m.safety_margin)},
          {"mean_motor_command", summary_json(m.mean_motor_command)},
          {"max_motor_command", summary_json(m.max_motor_command)},
          {"mean_speed", summary_json(m.mean_speed)},
          {"max_speed", summary_json(m.max_speed)},
          {"mean_angular_speed", summary_json(m.mean_angular_speed)},
          {"max_angular_speed", summary_json(m.max_angular_speed)}};
}

// ---------------------------------------------------------------------------
// Throughput benchmark: random sticks, auto-reset on.

struct BenchmarkReport {
  std::size_t n_envs = 0;
  std::size_t workers = 1;
  bool depth_enabled = false;
  int width = 0;
  int height = 0;
  std::size_t steps = 0;
  std::size_t substeps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
  double substeps_per_second = 0.0;
  StageTimes stages;  // summed over envs (CPU seconds)
  double render_share = 0.0;
};

inline BenchmarkReport benchmark_throughput(EnvConfig cfg, std::size_t n_envs, double duration, bool depth_enabled,
                                            std::size_t workers = 1) {
  if (n_envs == 0) throw ValidationError("benchmark: n_envs must be > 0");
  cfg.depth_enabled = depth_enabled;
  cfg.auto_reset = true;
  BatchEnv batch(cfg, n_envs, workers);
  for (std::size_t i = 0; i < n_envs; ++i) batch.env(i).set_profiling(true);
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < n_envs; ++i) rngs.emplace_back(derive_seed({cfg.seed, 0x62656e6368ULL, i}));
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  batch.reset();
  BenchmarkReport rep;
  std::vector<Vec4> actions(n_envs);
  double elapsed = 0.0;
  do {
    for (std::size_t i = 0; i < n_envs; ++i)
      actions[i] = Vec4(rngs[i].uniform(-1, 1), rngs[i].uniform(-1, 1), rngs[i].uniform(-1, 1), rngs[i].uniform(-1, 1));
    const auto results = batch.step(actions);
    for (const auto& r : results)
      if (!r.info.reset) ++rep.steps;
    elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  } while (elapsed < duration);
  rep.n_envs = n_envs;
  rep.workers = batch.workers();
  rep.depth_enabled = depth_enabled;
  rep.width = cfg.camera.width;
  rep.height = cfg.camera.height;
  rep.substeps = rep.steps * static_cast<std::size_t>(cfg.substeps);
  rep.seconds = elapsed;
  rep.steps_per_second = static_cast<double>(rep.steps) / elapsed;
  rep.substeps_per_second = static_cast<double>(rep.substeps) / elapsed;
  for (std::size_t i = 0; i < n_envs; ++i) rep.stages += batch.env(i).stage_times();
  const double total = rep.stages.physics + rep.stages.render + rep.stages.other;
  rep.render_share = total > 0.0 ? rep.stages.render / total : 0.0;
  return rep;
}

inline json benchmark_json(const BenchmarkReport& r) {
  return {{"n_envs", r.n_envs},
          {"workers", r.workers},
          {"depth_enabled", r.depth_enabled},
          {"depth_width", r.width},
          {"depth_height", r.height},
          {"steps", r.steps},
          {"substeps", r.substeps},
          {"seconds", r.seconds},
          {"steps_per_second", r.steps_per_second},
          {"substeps_per_second", r.substeps_per_second},
          {"stage_seconds", {{"physics", r.stages.physics}, {"render", r.stages.render}, {"other", r.stages.other}}},
          {"render_share", r.render_share}};
}

}  // namespace racesim
