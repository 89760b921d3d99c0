#pragma once

// Versioned track file: a JSON document holding the waypoints and the placed
// obstacles of one course. Doubles are written with round-trip precision, so
// save -> load -> save is byte-identical.
//
//   {
//     "format": "racesim-track", "version": 1,
//     "seed": u64, "level": int, "final_index": int,
//     "env_bounds": {"lo": [x,y,z], "hi": [x,y,z]},
//     "waypoints": [{"position": [x,y,z], "orientation": [w,x,y,z],
//                    "width": m, "height": m, "bars": bool}, ...],
//     "obstacles": [{"kind": "cuboid|cylinder|sphere",
//                    "category": "wall|tree|orbit|custom", "group": int,
//                    "position": [x,y,z], "orientation": [w,x,y,z],
//                    "dims": [a,b,c]}, ...]
//   }

#include <fstream>
#include <sstream>
#include <string>

#include "racesim/config.hpp"
#include "racesim/track.hpp"

namespace racesim {

inline constexpr const char* kTrackFormat = "racesim-track";
inline constexpr int kTrackVersion = 1;

namespace detail {

inline json quat_to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

inline Quat quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("orientation must be [w, x, y, z]");
  Quat q(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  if (std::abs(q.norm() - 1.0) > 1e-6) throw ValidationError("orientation must be a unit quaternion");
  return q;
}

inline Vec3 vec3_from_json(const json& j) {
  Vec3 v;
  nlohmann::adl_serializer<Vec3>::from_json(j, v);
  return v;
}

}  // namespace detail

inline json course_to_json(const Course& c) {
  json j;
  j["format"] = kTrackFormat;
  j["version"] = kTrackVersion;
  j["seed"] = c.track.seed;
  j["level"] = c.track.level;
  j["final_index"] = c.track.final_index;
  j["env_bounds"] = to_json(c.track.env_bounds);
  j["waypoints"] = json::array();
  for (const auto& wp : c.track.waypoints) {
    j["waypoints"].push_back({{"position", json(wp.position)},
                              {"orientation", detail::quat_to_json(wp.orientation)},
                              {"width", wp.width},
                              {"height", wp.height},
                              {"bars", wp.bars}});
  }
  j["obstacles"] = json::array();
  for (const auto& ob : c.obstacles) {
    j["obstacles"].push_back({{"kind", to_string(ob.kind)},
                              {"category", to_string(ob.category)},
                              {"group", ob.group},
                              {"position", json(ob.position)},
                              {"orientation", detail::quat_to_json(ob.orientation)},
                              {"dims", json(ob.dims)}});
  }
  return j;
}

inline Course course_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != kTrackFormat) throw ParseError("not a racesim track file");
    if (j.value("version", 0) != kTrackVersion)
      throw ParseError("unsupported track file version " + std::to_string(j.value("version", 0)));
    Course c;
    c.track.seed = j.value("seed", std::uint64_t{0});
    c.track.level = j.value("level", 0);
    if (j.contains("env_bounds")) c.track.env_bounds = from_json<Bounds3>(j.at("env_bounds"));
    for (const auto& w : j.at("waypoints")) {
      Waypoint wp;
      wp.position = detail::vec3_from_json(w.at("position"));
      wp.orientation = detail::quat_from_json(w.at("orientation"));
      wp.width = w.at("width").get<double>();
      wp.height = w.at("height").get<double>();
      wp.bars = w.value("bars", false);
      if (!(wp.width > 0 && wp.height > 0)) throw ValidationError("waypoint width and height must be > 0");
      c.track.waypoints.push_back(wp);
    }
    const int n = static_cast<int>(c.track.waypoints.size());
    if (n < 2) throw ValidationError("track needs at least 2 waypoints");
    c.track.final_index = j.value("final_index", n - 1);
    if (c.track.final_index < 1 || c.track.final_index >= n)
      throw ValidationError("final_index must be in [1, n_waypoints)");
    for (const auto& o : j.value("obstacles", json::array())) {
      Obstacle ob;
      ob.kind = shape_kind_from_string(o.at("kind").get<std::string>());
      ob.category = obstacle_category_from_string(o.value("category", std::string("custom")));
      ob.group = o.value("group", 0);
      ob.position = detail::vec3_from_json(o.at("position"));
      ob.orientation = o.contains("orientation") ? detail::quat_from_json(o.at("orientation")) : Quat::Identity();
      ob.dims = detail::vec3_from_json(o.at("dims"));
      c.obstacles.push_back(ob);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("track file: ") + e.what());
  }
}

inline std::string dump_course(const Course& c) { return course_to_json(c).dump(2) + "\n"; }

inline Course parse_course(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("track file: ") + e.what());
  }
  return course_from_json(j);
}

inline Course load_course(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open track file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_course(ss.str());
}

inline void save_course(const Course& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write track file: " + path);
  out << dump_course(c);
  if (!out) throw Error("failed writing track file: " + path);
}

}  // namespace racesim
