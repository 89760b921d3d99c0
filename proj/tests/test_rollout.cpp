#include <gtest/gtest.h>

#include <sstream>

#include "harness.hpp"
#include "racesim/rollout.hpp"

using namespace racesim;

namespace {

EnvConfig fast_config() {
  EnvConfig cfg;
  cfg.seed = 11;
  cfg.depth_enabled = false;
  cfg.camera.width = 48;
  cfg.camera.height = 27;
  return cfg;
}

bool same_body(const RigidBodyState& a, const RigidBodyState& b) {
  return a.p == b.p && a.v == b.v && a.q.coeffs() == b.q.coeffs() && a.w == b.w;
}

bool same_log(const TrajectoryLog& a, const TrajectoryLog& b) {
  if (a.steps.size() != b.steps.size() || a.cause != b.cause || a.seed != b.seed) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (!same_body(a.steps[i].body, b.steps[i].body) || a.steps[i].action != b.steps[i].action ||
        a.steps[i].reward.total != b.steps[i].reward.total)
      return false;
  }
  return true;
}

TrajectoryLog synthetic_log(Cause cause, std::vector<double> margins, double speed) {
  TrajectoryLog log;
  log.cause = cause;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    TrajectoryStep s;
    s.t = 0.04 * static_cast<double>(i + 1);
    s.min_obstacle_distance = margins[i];
    s.speed = speed;
    s.motor_command = 0.5;
    log.steps.push_back(s);
  }
  return log;
}

}  // namespace

TEST(ScriptedPolicy, SettlesToSmallRatesOnAxis) {
  // Fly along the axis of a distant gate until the loop settles: the attitude
  // then matches the desired thrust direction and the rate sticks vanish.
  const EnvConfig cfg = fast_config();
  Waypoint far;
  far.position = Vec3(200, 0, 0);
  harness::LoopSim sim(cfg);
  sim.body.v = Vec3(5, 0, 0);
  for (int k = 0; k < 100; ++k) {
    const ControlCommand cmd = scripted_guidance_policy(sim.body, far, cfg);
    for (int i = 0; i < cfg.substeps; ++i) sim.step(cmd);
  }
  const RigidBodyState& s = sim.body;
  const Vec4 a = scripted_guidance_policy(s, far, cfg).a;
  EXPECT_LT(a.head<3>().cwiseAbs().maxCoeff(), 0.02);
  EXPECT_NEAR(s.v.x(), 5.0, 0.3);
  EXPECT_LT(s.p.tail<2>().norm(), 0.05);
}

TEST(ScriptedPolicy, TargetToTheLeftYawsLeft) {
  const EnvConfig cfg = fast_config();
  Waypoint left;
  left.position = Vec3(0, 10, 0);
  left.orientation = Quat(rot_z(kPi / 2));
  const RigidBodyState s;
  const Vec4 a = scripted_guidance_policy(s, left, cfg).a;
  EXPECT_GT(a[2], 0.1);
  Waypoint right = left;
  right.position = Vec3(0, -10, 0);
  right.orientation = Quat(rot_z(-kPi / 2));
  EXPECT_LT(scripted_guidance_policy(s, right, cfg).a[2], -0.1);
}

TEST(ScriptedPolicy, SolvesStraightTracks) {
  const EnvConfig cfg = fast_config();
  const std::vector<Course> tracks{make_straight_course(3, 8.0, 2.0)};
  const auto logs = run_episodes(cfg, tracks, policy_factory("scripted"), 30);
  const Metrics m = compute_metrics(logs);
  EXPECT_GE(m.success_rate, 0.9) << metrics_json(m).dump();
}

TEST(Policies, FactoryNames) {
  for (const auto& n : policy_names()) EXPECT_NO_THROW(policy_factory(n));
  EXPECT_THROW(policy_factory("autopilot"), ValidationError);
  Env env(fast_config());
  const auto obs = env.reset();
  const Vec4 h = make_hover_policy()(env, obs);
  EXPECT_EQ(h.head<3>(), Vec3::Zero());
  EXPECT_NEAR(h[3], hover_throttle(env.config().drone, env.config().gravity), 1e-15);
  const Policy r1 = make_random_policy(3), r2 = make_random_policy(3);
  for (int i = 0; i < 10; ++i) {
    const Vec4 a = r1(env, obs);
    EXPECT_EQ(a, r2(env, obs));
    EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(RunEpisode, LogMatchesEnvTrajectory) {
  Env env(fast_config());
  const TrajectoryLog log = run_episode(env, make_random_policy(4));
  ASSERT_FALSE(log.steps.empty());
  EXPECT_NE(log.cause, Cause::kRunning);
  EXPECT_EQ(log.cause, env.state().cause);
  EXPECT_TRUE(same_body(log.steps.back().body, env.state().body));
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    EXPECT_NEAR(log.steps[i].t, 0.04 * static_cast<double>(i + 1), 1e-12);
    EXPECT_LE(log.steps[i].action.cwiseAbs().maxCoeff(), 1.0);
  }
  EXPECT_LE(static_cast<int>(log.steps.size()), env.max_steps());
}

TEST(RunEpisodes, IndependentOfWorkerCount) {
  const EnvConfig cfg = fast_config();
  const auto tracks = generate_courses(cfg, 3, 1);
  const auto one = run_episodes(cfg, tracks, policy_factory("random"), 3, 1, "t");
  const auto four = run_episodes(cfg, tracks, policy_factory("random"), 3, 4, "t");
  ASSERT_EQ(one.size(), 9u);
  ASSERT_EQ(four.size(), 9u);
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_TRUE(same_log(one[k], four[k])) << k;
    EXPECT_EQ(one[k].track_id, static_cast<int>(k / 3));
    EXPECT_EQ(one[k].episode, static_cast<int>(k % 3));
    EXPECT_EQ(one[k].track_ref, "t");
  }
  EXPECT_FALSE(same_log(one[0], one[1]));
  EXPECT_THROW(run_episodes(cfg, tracks, policy_factory("random"), -1), ValidationError);
}

TEST(GenerateCourses, Reproducible) {
  const EnvConfig cfg = fast_config();
  const auto a = generate_courses(cfg, 4, 2), b = generate_courses(cfg, 4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a[i].track.seed, b[i].track.seed);
    EXPECT_EQ(a[i].obstacles.size(), b[i].obstacles.size());
    EXPECT_EQ(a[i].track.level, 2);
  }
  EXPECT_NE(a[0].track.seed, a[1].track.seed);
}

TEST(TrajectoryIo, NdjsonRoundTrip) {
  const EnvConfig cfg = fast_config();
  const auto logs = run_episodes(cfg, generate_courses(cfg, 2, 1), policy_factory("scripted"), 2, 1, "gen");
  std::stringstream ss;
  write_trajectory_logs(ss, logs);
  const auto back = read_trajectory_logs(ss);
  ASSERT_EQ(back.size(), logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k) {
    EXPECT_TRUE(same_log(logs[k], back[k]));
    EXPECT_EQ(back[k].track_ref, "gen");
    EXPECT_EQ(back[k].clamped_actions, logs[k].clamped_actions);
    EXPECT_TRUE(same_body(back[k].initial, logs[k].initial));
    for (std::size_t i = 0; i < logs[k].steps.size(); ++i) {
      const auto& x = logs[k].steps[i];
      const auto& y = back[k].steps[i];
      EXPECT_EQ(x.target_index, y.target_index);
      EXPECT_EQ(x.min_obstacle_distance, y.min_obstacle_distance);
      EXPECT_EQ(x.reward.terms(), y.reward.terms());
    }
  }
  std::stringstream bad("{\"type\": \"step\"}\n");
  EXPECT_THROW(read_trajectory_logs(bad), ParseError);
}

TEST(Metrics, QuantilesAndMargins) {
  const Summary s = summarize({4, 1, 3, 2});
  EXPECT_EQ(s.n, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.q25, 1.75);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q75, 3.25);
  EXPECT_DOUBLE_EQ(s.max, 4);

  const std::vector<TrajectoryLog> logs{synthetic_log(Cause::kSuccess, {3.0, 1.5, 2.0}, 6.0),
                                        synthetic_log(Cause::kSuccess, {0.8, 1.0}, 4.0),
                                        synthetic_log(Cause::kCollision, {2.0, 0.3}, 5.0),
                                        synthetic_log(Cause::kTimeout, {kInf, kInf}, 1.0)};
  const Metrics m = compute_metrics(logs);
  EXPECT_EQ(m.episodes, 4u);
  EXPECT_EQ(m.successes, 2u);
  EXPECT_DOUBLE_EQ(m.success_rate, 0.5);
  EXPECT_EQ(m.causes.at("success"), 2u);
  EXPECT_EQ(m.causes.at("collision"), 1u);
  EXPECT_EQ(m.per_episode[0].safety_margin, 1.5);
  EXPECT_EQ(m.per_episode[2].safety_margin, 0.0);
  EXPECT_EQ(m.safety_margin.n, 3u);
  EXPECT_DOUBLE_EQ(m.safety_margin.min, 0.0);
  EXPECT_DOUBLE_EQ(m.mean_speed.mean, 4.0);
  EXPECT_NEAR(m.per_episode[0].duration, 0.12, 1e-12);

  const std::vector<TrajectoryLog> wins(5, synthetic_log(Cause::kSuccess, {1.0}, 2.0));
  EXPECT_EQ(compute_metrics(wins).success_rate, 1.0);
  EXPECT_THROW(compute_metrics({}), ValidationError);
  const json j = metrics_json(m);
  EXPECT_EQ(j.at("episodes"), 4);
  EXPECT_EQ(j.at("safety_margin").at("n"), 3);
}

TEST(Benchmark, ReportIsConsistent) {
  const BenchmarkReport r = benchmark_throughput(fast_config(), 4, 0.2, true, 2);
  EXPECT_EQ(r.n_envs, 4u);
  EXPECT_EQ(r.workers, 2u);
  EXPECT_TRUE(r.depth_enabled);
  EXPECT_EQ(r.width, 48);
  EXPECT_GT(r.steps, 0u);
  EXPECT_GE(r.seconds, 0.2);
  EXPECT_EQ(r.substeps, r.steps * 10u);
  EXPECT_NEAR(r.steps_per_second, static_cast<double>(r.steps) / r.seconds, 1e-9);
  EXPECT_GT(r.render_share, 0.0);
  EXPECT_LT(r.render_share, 1.0);
  EXPECT_THROW(benchmark_throughput(fast_config(), 0, 0.1, false), ValidationError);
}
