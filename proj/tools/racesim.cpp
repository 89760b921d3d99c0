// racesim: command-line front end for the racing simulator.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "racesim/config.hpp"
#include "racesim/env.hpp"
#include "racesim/rollout.hpp"
#include "racesim/sensors.hpp"
#include "racesim/track.hpp"
#include "racesim/track_io.hpp"

using namespace racesim;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int level = 0;
  std::string out;
};

void add_config(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "global seed (overrides config and RACESIM_SEED)");
}

CLI::Option* add_level(CLI::App* cmd, Common& c, const std::string& help) {
  return cmd->add_option("--level", c.level, help)->check(CLI::Range(1, 4));
}

// Config file (or defaults), then RACESIM_SEED, then --seed, then --level.
EnvConfig resolve_config(const Common& c) {
  EnvConfig cfg = c.config_path.empty() ? EnvConfig{} : load_config(c.config_path);
  apply_seed_override(cfg);
  if (c.seed_given) cfg.seed = c.seed;
  if (c.level > 0) {
    const Bounds3 env_bounds = cfg.bounds.env_bounds;
    cfg.bounds = difficulty_preset(c.level);
    cfg.bounds.env_bounds = env_bounds;
  }
  validate(cfg);
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

void print_course_summary(const Course& c, std::ostream& os) {
  int bars = 0;
  for (const auto& wp : c.track.waypoints) bars += wp.bars ? 1 : 0;
  os << "waypoints: " << c.track.waypoints.size() << "\n"
     << "final_index: " << c.track.final_index << "\n"
     << "obstacles: " << count_obstacles(c.obstacles) << " (walls " << count_obstacles(c.obstacles, ObstacleCategory::kWall)
     << ", trees " << count_obstacles(c.obstacles, ObstacleCategory::kTree) << ", orbits "
     << count_obstacles(c.obstacles, ObstacleCategory::kOrbit) << ", custom "
     << count_obstacles(c.obstacles, ObstacleCategory::kCustom) << ")\n"
     << "primitives: " << c.obstacles.size() << "\n"
     << "gates with bars: " << bars << "\n";
}

// "x,y,z,roll,pitch,yaw" in metres and radians.
CameraPose parse_pose(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--pose", "not a number: '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(x)) throw CLI::ValidationError("--pose", "not a number: '" + item + "'");
    v.push_back(x);
  }
  if (v.size() != 6) throw CLI::ValidationError("--pose", "expected x,y,z,roll,pitch,yaw");
  return {Vec3(v[0], v[1], v[2]), rpy_to_matrix(v[3], v[4], v[5])};
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--n-envs", "not an integer: '" + item + "'");
    }
    if (used != item.size() || x <= 0) throw CLI::ValidationError("--n-envs", "expected positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  if (out.empty()) throw CLI::ValidationError("--n-envs", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"racesim: obstacle-aware drone racing simulator"};
  app.require_subcommand(1);
  Common common;

  // generate-track
  auto* gen = app.add_subcommand("generate-track", "generate a randomized track segment with obstacles");
  int n_waypoints = 4;
  add_config(gen, common);
  add_seed(gen, common);
  add_level(gen, common, "difficulty level 1..4 (default 1)");
  gen->add_option("--n-waypoints", n_waypoints, "waypoints in the segment")->check(CLI::Range(3, 1000));
  gen->add_option("--out", common.out, "output track file")->required();

  // inspect-track
  auto* inspect = app.add_subcommand("inspect-track", "print a summary of a track file");
  std::string track_path;
  inspect->add_option("track", track_path, "track file")->required()->check(CLI::ExistingFile);

  // rollout
  auto* roll = app.add_subcommand("rollout", "run episodes with a policy and log trajectories");
  int episodes = 10;
  int n_tracks = 1;
  std::string policy = "scripted";
  std::string metrics_out;
  std::size_t workers = 1;
  bool eval_mode = false;
  bool depth = false;
  add_config(roll, common);
  add_seed(roll, common);
  auto* roll_track = roll->add_option("--track", track_path, "track file")->check(CLI::ExistingFile);
  add_level(roll, common, "generate tracks at this difficulty level instead of --track");
  roll->add_option("--n-tracks", n_tracks, "generated tracks (with --level)")->check(CLI::Range(1, 1000000));
  roll->add_option("--episodes", episodes, "episodes per track")->check(CLI::Range(0, 1000000));
  roll->add_option("--policy", policy, "policy name")->check(CLI::IsMember(policy_names()));
  roll->add_option("--out", common.out, "trajectory log (newline-delimited JSON)")->required();
  roll->add_option("--metrics-out", metrics_out, "metrics JSON file");
  roll->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 256));
  roll->add_flag("--eval", eval_mode, "evaluation initial-state ranges");
  roll->add_flag("--depth", depth, "render depth observations (slow)");

  // metrics
  auto* met = app.add_subcommand("metrics", "compute metrics from a trajectory log");
  std::string log_path;
  met->add_option("log", log_path, "trajectory log")->required()->check(CLI::ExistingFile);
  met->add_option("--out", common.out, "metrics JSON file");

  // render-depth
  auto* rend = app.add_subcommand("render-depth", "render one depth frame to a 16-bit PGM");
  std::string pose_str;
  int width = 0, height = 0;
  add_config(rend, common);
  rend->add_option("--track", track_path, "track file (default: empty world)")->check(CLI::ExistingFile);
  rend->add_option("--pose", pose_str, "camera pose x,y,z,roll,pitch,yaw (m, rad)")->required();
  rend->add_option("--width", width, "image width (default from config)")->check(CLI::Range(1, 8192));
  rend->add_option("--height", height, "image height (default from config)")->check(CLI::Range(1, 8192));
  rend->add_option("--out", common.out, "output PGM")->required();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "measure env steps per second");
  std::string n_envs_str = "1,64,512";
  double duration = 1.0;
  int depth_w = 48, depth_h = 27;
  std::string mode = "both";
  add_config(bench, common);
  add_seed(bench, common);
  bench->add_option("--n-envs", n_envs_str, "comma-separated batch sizes");
  bench->add_option("--duration", duration, "seconds per configuration")->check(CLI::PositiveNumber);
  bench->add_option("--depth-width", depth_w, "depth width when rendering")->check(CLI::Range(1, 8192));
  bench->add_option("--depth-height", depth_h, "depth height when rendering")->check(CLI::Range(1, 8192));
  bench->add_option("--depth", mode, "off, on or both")->check(CLI::IsMember({"off", "on", "both"}));
  bench->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 256));
  bench->add_option("--out", common.out, "report file (JSON lines)");

  // preset
  auto* pre = app.add_subcommand("preset", "print the config for a difficulty level");
  add_config(pre, common);
  add_level(pre, common, "difficulty level 1..4")->required();
  pre->add_option("--out", common.out, "output config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      if (common.level == 0) common.level = 1;
      const EnvConfig cfg = resolve_config(common);
      EnvConfig seg = cfg;
      seg.n_waypoints_per_segment = n_waypoints;
      const Course c = generate_courses(seg, 1, common.level).front();
      save_course(c, common.out);
      print_course_summary(c, std::cout);
      std::cout << "dropped: " << c.dropped << "\nwritten: " << common.out << "\n";
    } else if (*inspect) {
      const Course c = load_course(track_path);
      print_course_summary(c, std::cout);
      std::cout << "seed: " << c.track.seed << "\nlevel: " << c.track.level << "\n";
      for (std::size_t i = 0; i < c.track.waypoints.size(); ++i) {
        const auto& wp = c.track.waypoints[i];
        std::printf("wp %zu: p=(%.3f, %.3f, %.3f) axis=(%.3f, %.3f, %.3f) %.2fx%.2f m%s\n", i, wp.position.x(),
                    wp.position.y(), wp.position.z(), wp.axis().x(), wp.axis().y(), wp.axis().z(), wp.width,
                    wp.height, wp.bars ? " bars" : "");
      }
      int blocked = 0;
      for (const auto& region : pass_regions(c.track, 0.0))
        for (const auto& ob : c.obstacles) blocked += overlaps(region, ob) ? 1 : 0;
      const auto [lo, hi] = track_extent(c.track);
      const bool fits = c.track.env_bounds.contains(lo) && c.track.env_bounds.contains(hi);
      std::cout << "pass regions blocked: " << blocked << "\nfits env bounds: " << (fits ? "yes" : "no") << "\n";
    } else if (*roll) {
      if (roll_track->count() == 0 && common.level == 0)
        throw CLI::ValidationError("rollout", "one of --track or --level is required");
      if (roll_track->count() > 0 && common.level > 0)
        throw CLI::ValidationError("rollout", "--track and --level are mutually exclusive");
      EnvConfig cfg = resolve_config(common);
      cfg.eval_mode = eval_mode;
      cfg.depth_enabled = depth;
      std::vector<Course> tracks;
      std::string ref;
      if (roll_track->count() > 0) {
        tracks.push_back(load_course(track_path));
        ref = track_path;
      } else {
        tracks = generate_courses(cfg, n_tracks, common.level);
        ref = "level-" + std::to_string(common.level);
      }
      const auto logs = run_episodes(cfg, tracks, policy_factory(policy), episodes, workers, ref);
      auto out = open_out(common.out);
      write_trajectory_logs(out, logs);
      if (logs.empty()) {
        std::cout << "no episodes run; wrote empty log " << common.out << "\n";
        return 0;
      }
      const Metrics m = compute_metrics(logs);
      std::printf("episodes: %zu\nsuccess rate: %.4g\nmean speed: %.3f m/s\n", m.episodes, m.success_rate,
                  m.mean_speed.mean);
      if (m.safety_margin.n > 0)
        std::printf("safety margin q25/median/q75: %.3f / %.3f / %.3f m\n", m.safety_margin.q25,
                    m.safety_margin.median, m.safety_margin.q75);
      else
        std::printf("safety margin: no obstacles\n");
      for (const auto& [cause, n] : m.causes) std::printf("  %s: %zu\n", cause.c_str(), n);
      if (!metrics_out.empty()) open_out(metrics_out) << metrics_json(m).dump(2) << "\n";
    } else if (*met) {
      std::ifstream in(log_path);
      if (!in) throw Error("cannot open " + log_path);
      const auto logs = read_trajectory_logs(in);
      const std::string text = metrics_json(compute_metrics(logs)).dump(2) + "\n";
      std::cout << text;
      if (!common.out.empty()) open_out(common.out) << text;
    } else if (*rend) {
      const CameraPose pose = parse_pose(pose_str);
      EnvConfig cfg = resolve_config(common);
      CameraParams cam = cfg.camera;
      if (width > 0) cam.width = width;
      if (height > 0) cam.height = height;
      Course c;
      c.track.env_bounds = cfg.bounds.env_bounds;
      std::vector<Obstacle> bars;
      if (!track_path.empty()) {
        c = load_course(track_path);
        for (const auto& wp : c.track.waypoints) {
          auto b = gate_bars(wp, cfg.bounds.bar_thickness);
          bars.insert(bars.end(), b.begin(), b.end());
        }
      }
      const Scene scene{c.obstacles, bars, c.track.env_bounds};
      const DepthImage img = render_depth(pose, cam, scene);
      write_pgm16(img, common.out);
      float lo = 1.0f, hi = 0.0f;
      for (float v : img.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      std::printf("%dx%d depth written to %s\nmin %.6f max %.6f center %.6f\n", img.width, img.height,
                  common.out.c_str(), lo, hi, img.at(img.height / 2, img.width / 2));
    } else if (*bench) {
      const auto sizes = parse_sizes(n_envs_str);
      EnvConfig cfg = resolve_config(common);
      cfg.camera.width = depth_w;
      cfg.camera.height = depth_h;
      std::vector<bool> modes;
      if (mode != "on") modes.push_back(false);
      if (mode != "off") modes.push_back(true);
      std::ofstream out;
      if (!common.out.empty()) out = open_out(common.out);
      for (bool d : modes)
        for (std::size_t n : sizes) {
          const std::string line = benchmark_json(benchmark_throughput(cfg, n, duration, d, workers)).dump();
          std::cout << line << "\n" << std::flush;
          if (out.is_open()) out << line << "\n";
        }
    } else if (*pre) {
      const EnvConfig cfg = resolve_config(common);
      const std::string text = dump_config(cfg);
      if (common.out.empty()) std::cout << text;
      else open_out(common.out) << text;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
