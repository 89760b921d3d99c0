#pragma once

// Eight-term reward. Dense terms are evaluated every control step; sparse
// terms (collision, waypoint, timeout) take their configured value on the
// step where the event happens.

#include <array>
#include <cmath>

#include "racesim/config.hpp"
#include "racesim/math.hpp"

namespace racesim {

struct RewardBreakdown {
  double r_prog = 0.0;
  double r_prec = 0.0;
  double r_cmd = 0.0;
  double r_col = 0.0;
  double r_guid = 0.0;
  double r_wp = 0.0;
  double r_time = 0.0;
  double r_vel = 0.0;
  double total = 0.0;

  // Unweighted terms in RewardTerm order.
  std::array<double, kNumRewardTerms> terms() const {
    return {r_prog, r_prec, r_cmd, r_col, r_guid, r_wp, r_time, r_vel};
  }
};

struct RewardEvents {
  bool collided = false;
  bool passed_wp = false;
  bool timed_out = false;
};

struct DenseTerms {
  double prog = 0.0;
  double prec = 0.0;
  double cmd = 0.0;
  double guid = 0.0;
  double vel = 0.0;
};

inline double guidance_support(double x, double k0) { return std::max(1.0 - std::abs(x) / k0, 0.0); }

// p_g is the drone position in the target waypoint frame.
inline double guidance_reward(const Vec3& p_g, double w_wp, double h_wp, const GuidanceParams& gp) {
  const double x = p_g.x(), y = p_g.y(), z = p_g.z();
  const double f = guidance_support(x, gp.k0);
  if (f == 0.0) return 0.0;
  const double k2 = x > 0.0 ? gp.k2_front : gp.k2_back;
  const double r2 = y * y + z * z;
  double v = k2 * (1.0 + f * f);
  if (r2 != 0.0) {
    const double zh = z / h_wp, yw = y / w_wp;
    v *= std::sqrt(r2 / (zh * zh + yw * yw));
  }
  const double e = std::exp(-r2 / (2.0 * v));
  const double g = x > 0.0 ? gp.k1 * e : 1.0 - e;
  return -f * f * g;
}

inline double progress_reward(double dist_prev, double dist_cur) { return dist_prev - dist_cur; }

// delta is the angle between the camera optical axis and the direction to
// the target waypoint; c < 0 makes the result a penalty in (-1, 0].
inline double perception_reward(const Vec3& camera_axis, const Vec3& dir_to_wp, double c) {
  const double cosd = std::clamp(camera_axis.dot(dir_to_wp), -1.0, 1.0);
  const double delta = std::acos(cosd);
  return std::exp(c * std::pow(delta, 4)) - 1.0;
}

inline double command_reward(const Vec4& a_t, const Vec4& a_prev, const Vec3& w_body, double c1, double c2) {
  return -c1 * (a_t - a_prev).squaredNorm() - c2 * w_body.norm();
}

inline double velocity_reward(const Vec3& v_body, double k3, double k4) {
  const double back = std::min(v_body.x(), 0.0);
  return k3 * v_body.y() * v_body.y() + k4 * back * back;
}

inline RewardBreakdown total_reward(const RewardEvents& ev, const DenseTerms& dense, const RewardWeights& w) {
  RewardBreakdown b;
  b.r_prog = dense.prog;
  b.r_prec = dense.prec;
  b.r_cmd = dense.cmd;
  b.r_guid = dense.guid;
  b.r_vel = dense.vel;
  b.r_col = ev.collided ? w.collision_value : 0.0;
  b.r_wp = ev.passed_wp ? w.waypoint_value : 0.0;
  b.r_time = ev.timed_out ? w.timeout_value : 0.0;
  const auto t = b.terms();
  b.total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) b.total += w.lambda[i] * t[i];
  return b;
}

}  // namespace racesim
