#include <gtest/gtest.h>

#include "racesim/env.hpp"
#include "racesim/rollout.hpp"
#include "racesim/track_io.hpp"

using namespace racesim;

namespace {

EnvConfig fast_config(bool depth = false) {
  EnvConfig cfg;
  cfg.seed = 31;
  cfg.camera.width = 48;
  cfg.camera.height = 27;
  cfg.depth_enabled = depth;
  return cfg;
}

// No randomized initial motion: rest, level, zero initial action.
EnvConfig calm_config() {
  EnvConfig cfg = fast_config();
  cfg.init.speed = {0.0, 0.0};
  cfg.init.body_rate_max = 0.0;
  cfg.init.attitude_angle_max = 0.0;
  cfg.init.action_lo = cfg.init.action_hi = Vec4::Zero();
  return cfg;
}

ResetOptions override_with(const Course& c) {
  ResetOptions o;
  o.track_override = c;
  return o;
}

bool same_bundle(const ObservationBundle& a, const ObservationBundle& b) {
  return a.state == b.state && a.waypoints == b.waypoints && a.prev_action == b.prev_action &&
         a.depth.values == b.depth.values;
}

bool same_result(const StepResult& a, const StepResult& b) {
  return same_bundle(a.obs, b.obs) && a.reward.total == b.reward.total && a.terminated == b.terminated &&
         a.cause == b.cause && a.info.safety_margin == b.info.safety_margin && a.info.speed == b.info.speed;
}

}  // namespace

TEST(Causes, StringsAndCrashClass) {
  for (Cause c : {Cause::kRunning, Cause::kSuccess, Cause::kCollision, Cause::kOutOfBounds, Cause::kWrongSide,
                  Cause::kTimeout}) {
    EXPECT_EQ(cause_from_string(to_string(c)), c);
  }
  EXPECT_TRUE(is_crash(Cause::kCollision));
  EXPECT_TRUE(is_crash(Cause::kOutOfBounds));
  EXPECT_TRUE(is_crash(Cause::kWrongSide));
  EXPECT_FALSE(is_crash(Cause::kTimeout));
  EXPECT_FALSE(is_crash(Cause::kSuccess));
}

TEST(CheckCollision, ClearHitAndTangency) {
  const OrientedBox box{Vec3::Zero(), Mat3::Identity(), Vec3(0.12, 0.12, 0.04)};
  std::vector<Obstacle> obs{Obstacle::sphere(Vec3(30, 0, 0), 1.0)};
  EXPECT_FALSE(check_collision(box, obs, {}));
  obs.push_back(Obstacle::cuboid(Vec3(0.05, 0, 0), Quat::Identity(), Vec3(0.2, 3, 3)));
  EXPECT_EQ(check_collision(box, obs, {}), std::optional<std::size_t>(1));
  // Exactly touching: sphere surface meets the +x face.
  const std::vector<Obstacle> touch{Obstacle::sphere(Vec3(1.12, 0, 0), 1.0)};
  EXPECT_TRUE(check_collision(box, touch, {}));
  const std::vector<Obstacle> bars{Obstacle::cuboid(Vec3(0, 0, 0.1), Quat::Identity(), Vec3(1, 1, 0.2))};
  EXPECT_EQ(check_collision(box, {obs[0]}, bars), std::optional<std::size_t>(1));
}

TEST(Env, ResetIsDeterministicPerSeed) {
  Env a(fast_config(true)), b(fast_config(true));
  EXPECT_TRUE(same_bundle(a.reset(), b.reset()));
  EXPECT_EQ(dump_course(a.state().course), dump_course(b.state().course));
  Env c(fast_config(true), 1);
  c.reset();
  EXPECT_NE(dump_course(a.state().course), dump_course(c.state().course));
  a.seed(77);
  b.seed(77);
  EXPECT_TRUE(same_bundle(a.reset(), b.reset()));
  Rng rng(0);
  for (int i = 0; i < 50; ++i) {
    const Vec4 act(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (a.state().terminated) break;
    EXPECT_TRUE(same_result(a.step(act), b.step(act)));
  }
}

TEST(Env, InitialStatesAreClearAndInBounds) {
  Env env(fast_config());
  for (int i = 0; i < 1000; ++i) {
    env.reset();
    const auto& st = env.state();
    const OrientedBox box = oriented_collision_box(st.body, env.config().drone);
    ASSERT_FALSE(check_collision(box, st.course.obstacles, st.bars)) << "reset " << i;
    ASSERT_FALSE(box_outside_bounds(box, st.course.track.env_bounds.lo, st.course.track.env_bounds.hi));
    EXPECT_EQ(st.target_index, 1);
    EXPECT_LE(st.body.v.norm(), 3.0 + 1e-12);
    EXPECT_LE(st.body.w.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(st.prev_action.cwiseAbs().maxCoeff(), 1.0);
    const Vec3 local = st.course.track.waypoints[0].to_local(st.body.p);
    EXPECT_LT(local.x(), 0.0);
    EXPECT_GE(st.camera.tilt_angle, 0.2);
    EXPECT_LE(st.camera.tilt_angle, 0.5);
  }
}

TEST(Env, TrackOverrideIsUsedExactly) {
  const Course c = make_straight_course(3, 8.0, 2.0);
  Env env(fast_config());
  env.reset(override_with(c));
  EXPECT_EQ(dump_course(env.state().course), dump_course(c));
  // Padding adds one observation-only waypoint straight ahead.
  ASSERT_EQ(env.state().obs_waypoints.size(), 4u);
  EXPECT_NEAR((env.state().obs_waypoints[3].position - Vec3(24, 0, 0)).norm(), 0.0, 1e-12);
  Course bad = c;
  bad.track.final_index = 3;
  EXPECT_THROW(env.reset(override_with(bad)), ValidationError);
}

TEST(Env, KeepTrackWhenNotFresh) {
  Env env(fast_config());
  env.reset();
  const std::string first = dump_course(env.state().course);
  ResetOptions keep;
  keep.fresh_track = false;
  env.reset(keep);
  EXPECT_EQ(dump_course(env.state().course), first);
  env.reset();
  EXPECT_NE(dump_course(env.state().course), first);
}

TEST(Env, HoverRunsToTimeout) {
  EnvConfig cfg = calm_config();
  cfg.episode_time_limit = 6.0;
  Env env(cfg);
  env.reset(override_with(make_straight_course(2, 30.0, 2.0)));
  const Vec4 hover(0, 0, 0, hover_throttle(cfg.drone, cfg.gravity));
  const int n = env.max_steps();
  EXPECT_EQ(n, 150);
  for (int i = 1; i <= n; ++i) {
    const StepResult r = env.step(hover);
    EXPECT_NEAR(r.info.elapsed, i * 0.04, 1e-12);
    if (i < n) {
      ASSERT_FALSE(r.terminated) << "step " << i << " " << to_string(r.cause);
      EXPECT_EQ(r.reward.r_time, 0.0);
    } else {
      EXPECT_TRUE(r.terminated);
      EXPECT_EQ(r.cause, Cause::kTimeout);
      EXPECT_EQ(r.reward.r_time, cfg.rewards.timeout_value);
    }
  }
  EXPECT_THROW(env.step(hover), ContractViolation);
}

TEST(Env, FlyingIntoWallIsCollision) {
  Course c = make_straight_course(3, 8.0, 2.0);
  c.obstacles.push_back(Obstacle::cuboid(Vec3(4, 0, 0), Quat::Identity(), Vec3(0.2, 6, 6)));
  Env env(calm_config());
  const TrajectoryLog log = run_episode(env, make_scripted_policy(), override_with(c));
  EXPECT_EQ(log.cause, Cause::kCollision);
  const auto& last = log.steps.back();
  EXPECT_EQ(last.reward.r_col, -10.0);
  EXPECT_LT(last.reward.total, -9.0);
  EXPECT_EQ(log.steps.front().target_index, 1);
  EXPECT_EQ(env.state().cause, Cause::kCollision);
}

TEST(Env, PassingFinalWaypointIsSuccess) {
  Env env(calm_config());
  const Course c = make_straight_course(3, 8.0, 2.0);
  ObservationBundle obs = env.reset(override_with(c));
  const Policy policy = make_scripted_policy();
  int passes = 0, prev_target = 1;
  double prog_sum = 0.0, leg_expected = 0.0;
  Vec3 leg_start = env.state().body.p;
  for (;;) {
    const StepResult r = env.step(policy(env, obs));
    const auto& st = env.state();
    EXPECT_EQ(r.terminated, r.cause != Cause::kRunning);
    EXPECT_GE(r.info.target_index, prev_target);
    EXPECT_NEAR(r.reward.total, [&] {
      double t = 0.0;
      const auto terms = r.reward.terms();
      for (std::size_t k = 0; k < terms.size(); ++k) t += env.config().rewards.lambda[k] * terms[k];
      return t;
    }(), 1e-12);
    prog_sum += r.reward.r_prog;
    if (r.info.passed) {
      ++passes;
      EXPECT_EQ(r.reward.r_wp, 5.0);
      // Progress telescopes over each leg, measured against that leg's target.
      const Vec3 target = c.track.waypoints[static_cast<std::size_t>(prev_target)].position;
      leg_expected += (leg_start - target).norm() - (st.body.p - target).norm();
      leg_start = st.body.p;
    } else {
      EXPECT_EQ(r.reward.r_wp, 0.0);
    }
    prev_target = r.info.target_index;
    if (r.terminated) {
      EXPECT_EQ(r.cause, Cause::kSuccess);
      break;
    }
    obs = r.obs;
  }
  EXPECT_EQ(passes, 2);
  EXPECT_NEAR(prog_sum, leg_expected, 1e-9);
}

TEST(Env, WrongSideTerminatesAsCrash) {
  // Spawn behind gate 0 and fly backwards through gate 1 placed behind it.
  Course c = make_straight_course(2, 8.0, 2.0);
  c.track.waypoints[1].position = Vec3(-3, 0, 0);
  Env env(calm_config());
  env.reset(override_with(c));
  StepResult r;
  const Policy to_gate = [](const Env& e, const ObservationBundle&) {
    const auto& st = e.state();
    Waypoint fake = st.obs_waypoints[1];
    fake.orientation = Quat(rot_z(kPi));  // steer as if the gate faced -x
    return scripted_guidance_policy(st.body, fake, e.config()).a;
  };
  ObservationBundle obs = env.observe();
  for (int i = 0; i < env.max_steps(); ++i) {
    r = env.step(to_gate(env, obs));
    if (r.terminated) break;
    obs = r.obs;
  }
  ASSERT_TRUE(r.terminated);
  EXPECT_EQ(r.cause, Cause::kWrongSide);
  EXPECT_EQ(r.reward.r_col, env.config().rewards.collision_value);
}

TEST(Env, AutoResetContinues) {
  EnvConfig cfg = calm_config();
  cfg.auto_reset = true;
  cfg.episode_time_limit = 0.2;
  Env env(cfg);
  env.reset(override_with(make_straight_course(2, 30.0, 2.0)));
  const Vec4 hover(0, 0, 0, hover_throttle(cfg.drone, cfg.gravity));
  StepResult r;
  for (int i = 0; i < 5; ++i) r = env.step(hover);
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(r.cause, Cause::kTimeout);
  r = env.step(hover);
  EXPECT_TRUE(r.info.reset);
  EXPECT_FALSE(r.terminated);
  EXPECT_EQ(r.info.steps, 0);
  EXPECT_EQ(env.episode(), 2u);
}

TEST(Env, ActionsAreClampedAndValidated) {
  Env env(calm_config());
  env.reset(override_with(make_straight_course(2, 30.0, 2.0)));
  const StepResult r = env.step(Vec4(3, 0, 0, -2));
  EXPECT_TRUE(r.info.action_clamped);
  EXPECT_EQ(env.state().prev_action, Vec4(1, 0, 0, -1));
  EXPECT_EQ(r.obs.prev_action, Vec4(1, 0, 0, -1));
  EXPECT_THROW(env.step(Vec4(std::nan(""), 0, 0, 0)), ContractViolation);
}

TEST(Env, ObservationShapes) {
  Env env(fast_config(true));
  const ObservationBundle o = env.reset();
  EXPECT_EQ(o.depth.width, 48);
  EXPECT_EQ(o.depth.height, 27);
  EXPECT_EQ(o.depth.values.size(), 48u * 27u);
  EXPECT_EQ(o.state.size(), 18u);
  EXPECT_EQ(o.waypoints.size(), 34u);
  for (float v : o.depth.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  Env off(fast_config(false));
  EXPECT_TRUE(off.reset().depth.empty());
}

TEST(Env, ProfilingSplitsStages) {
  Env env(fast_config(true));
  env.set_profiling(true);
  env.reset();
  Rng rng(1);
  for (int i = 0; i < 20 && !env.state().terminated; ++i)
    env.step(Vec4(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0, 0));
  EXPECT_GT(env.stage_times().physics, 0.0);
  EXPECT_GT(env.stage_times().render, 0.0);
  EXPECT_GE(env.stage_times().other, 0.0);
}

TEST(BatchEnv, MatchesScalarEnvsAcrossWorkerCounts) {
  const EnvConfig cfg = fast_config(true);
  const std::size_t n = 6;
  std::vector<Env> scalar;
  for (std::size_t i = 0; i < n; ++i) scalar.emplace_back(cfg, i);
  for (auto& e : scalar) e.reset();
  for (std::size_t workers : {1u, 3u}) {
    BatchEnv batch(cfg, n, workers);
    EXPECT_EQ(batch.workers(), workers);
    const auto obs = batch.reset();
    std::vector<Env> ref;
    for (std::size_t i = 0; i < n; ++i) ref.emplace_back(cfg, i);
    for (std::size_t i = 0; i < n; ++i) EXPECT_TRUE(same_bundle(obs[i], ref[i].reset()));
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      std::vector<Vec4> acts(n);
      for (auto& a : acts) a = Vec4(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0);
      const auto rs = batch.step(acts);
      for (std::size_t i = 0; i < n; ++i) {
        if (ref[i].state().terminated) {
          EXPECT_TRUE(rs[i].terminated || rs[i].info.reset);
          continue;
        }
        EXPECT_TRUE(same_result(rs[i], ref[i].step(acts[i]))) << "env " << i << " step " << t;
      }
      bool any_done = false;
      for (std::size_t i = 0; i < n; ++i) any_done |= batch.env(i).state().terminated;
      if (any_done) break;
    }
  }
  BatchEnv batch(cfg, 2);
  batch.reset();
  EXPECT_THROW(batch.step({Vec4::Zero()}), ContractViolation);
}

TEST(BatchEnv, SeedingIsPositionalAndReproducible) {
  const EnvConfig cfg = fast_config();
  BatchEnv a(cfg, 4), b(cfg, 4);
  a.seed(123);
  b.seed(123);
  a.reset();
  b.reset();
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_EQ(dump_course(a.env(i).state().course), dump_course(b.env(i).state().course));
  EXPECT_NE(dump_course(a.env(0).state().course), dump_course(a.env(1).state().course));
  Env solo(cfg);
  solo.seed(derive_seed({123, 2}));
  solo.reset();
  EXPECT_EQ(dump_course(solo.state().course), dump_course(a.env(2).state().course));
}
