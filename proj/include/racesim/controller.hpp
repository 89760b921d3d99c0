#pragma once

// Betaflight-style body-rate controller: stick curve -> rate PID -> mixer.
//
// Mixer signs follow the motor table documented on DroneParams (FLU body,
// Betaflight Quad-X numbering, props-out):
//
//   motor        position   roll  pitch  yaw
//   1 rear-right (-,-)       -1    +1    -1
//   2 front-right(+,-)       -1    -1    +1
//   3 rear-left  (-,+)       +1    +1    +1
//   4 front-left (+,+)       +1    -1    -1
//
// Positive roll demand raises the left pair (torque about +x), positive pitch
// demand raises the rear pair (torque about +y), positive yaw demand raises
// the motors whose reaction torque is +z.

#include <algorithm>
#include <array>
#include <utility>

#include "racesim/config.hpp"
#include "racesim/math.hpp"

namespace racesim {

inline constexpr std::array<double, 4> kMixRoll{-1.0, -1.0, 1.0, 1.0};
inline constexpr std::array<double, 4> kMixPitch{1.0, -1.0, 1.0, -1.0};
inline constexpr std::array<double, 4> kMixYaw{-1.0, 1.0, 1.0, -1.0};

// Sticks: roll rate, pitch rate, yaw rate, throttle; each in [-1, 1].
struct ControlCommand {
  Vec4 a = Vec4::Zero();

  ControlCommand() = default;
  explicit ControlCommand(const Vec4& raw) : a(raw.cwiseMax(-1.0).cwiseMin(1.0)) {}
  ControlCommand(double roll, double pitch, double yaw, double throttle)
      : ControlCommand(Vec4(roll, pitch, yaw, throttle)) {}

  Vec3 rates() const { return a.head<3>(); }
  double throttle() const { return a[3]; }
};

struct MotorCommand {
  Vec4 u = Vec4::Zero();
};

struct RateControllerState {
  Vec3 integrator = Vec3::Zero();
  Vec3 last_error = Vec3::Zero();
  Vec3 last_measurement = Vec3::Zero();
  bool primed = false;  // false until the first measurement is seen
};

// Betaflight "actual rates" on one axis: linear slope `center` at the stick
// center blended into an expo term reaching `max_rate` at full stick.
inline double actual_rate(double x, double center, double max_rate, double expo) {
  x = clamp_unit(x);
  const double ax = std::abs(x);
  const double expof = ax * (std::pow(x, 5) * expo + x * (1.0 - expo));
  const double stick_movement = std::max(0.0, max_rate - center);
  return x * center + stick_movement * expof;
}

inline Vec3 rates_curve(const Vec3& a_rates, const ControllerParams& p) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = actual_rate(a_rates[i], p.center_rate[i], p.max_rate[i], p.expo[i]);
  return out;
}

// Stick deflection producing `rate` on `axis` (bisection on the monotone
// curve); saturates at +-1.
inline double inverse_rate(double rate, int axis, const ControllerParams& p) {
  double lo = -1.0, hi = 1.0;
  auto f = [&](double x) { return actual_rate(x, p.center_rate[axis], p.max_rate[axis], p.expo[axis]); };
  if (rate <= f(lo)) return lo;
  if (rate >= f(hi)) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// PID on rate error, derivative on measurement, clamped integrator. Output is
// a normalized torque demand in [-1, 1] per axis.
inline std::pair<Vec3, RateControllerState> pid_step(const ControllerParams& p, const RateControllerState& s,
                                                     const Vec3& w_des, const Vec3& w_meas, double dt) {
  RateControllerState n = s;
  const Vec3 err = w_des - w_meas;
  n.integrator = (s.integrator + dt * p.ki.cwiseProduct(err)).cwiseMax(-p.integrator_limit).cwiseMin(p.integrator_limit);
  Vec3 d_term = Vec3::Zero();
  if (s.primed) d_term = -p.kd.cwiseProduct(w_meas - s.last_measurement) / dt;
  n.last_error = err;
  n.last_measurement = w_meas;
  n.primed = true;
  const Vec3 out = (p.kp.cwiseProduct(err) + n.integrator + d_term).cwiseMax(-1.0).cwiseMin(1.0);
  return {out, n};
}

// Air-mode mixer. Throttle maps from [-1, 1] to [0, 1]. If the torque spread
// does not fit into [idle, 1] it is scaled down to fit; otherwise the whole
// vector is shifted so the spread (and so the torque demand) is kept.
inline MotorCommand mix(const Vec3& demand, double throttle, double idle = 0.0) {
  Vec4 m;
  for (int i = 0; i < 4; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m[i] = kMixRoll[k] * demand.x() + kMixPitch[k] * demand.y() + kMixYaw[k] * demand.z();
  }
  const double width = 1.0 - idle;
  double lo = m.minCoeff();
  double hi = m.maxCoeff();
  const double range = hi - lo;
  double thr = 0.5 * (clamp_unit(throttle) + 1.0);
  if (range > width) {
    m *= width / range;
    lo = m.minCoeff();
    thr = idle - lo;
  } else {
    thr = std::clamp(thr, idle - lo, 1.0 - hi);
  }
  MotorCommand out;
  out.u = (m.array() + thr).cwiseMax(idle).cwiseMin(1.0);
  return out;
}

inline Vec4 motor_steady_state(const MotorCommand& cmd, const DroneParams& drone) {
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = polyval(drone.motor_poly, std::clamp(cmd.u[i], 0.0, 1.0));
  return out;
}

// ---------------------------------------------------------------------------
// Model inversions used for initial conditions and scripted policies.

namespace detail {
template <typename F>
double bisect_increasing(F f, double target, double lo, double hi) {
  if (target <= f(lo)) return lo;
  if (target >= f(hi)) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

// Rotor speed (rev/s) at which one rotor produces `thrust` newtons.
inline double rotor_speed_for_thrust(double thrust, const DroneParams& d) {
  const double w_max = polyval(d.motor_poly, 1.0);
  return detail::bisect_increasing([&](double w) { return polyval(d.thrust_poly, w); }, thrust, 0.0, w_max);
}

inline double motor_command_for_speed(double omega, const DroneParams& d) {
  return detail::bisect_increasing([&](double u) { return polyval(d.motor_poly, u); }, omega, 0.0, 1.0);
}

// Throttle stick giving `total_thrust` with zero torque demand.
inline double throttle_for_thrust(double total_thrust, const DroneParams& d) {
  const double u = motor_command_for_speed(rotor_speed_for_thrust(0.25 * total_thrust, d), d);
  return clamp_unit(2.0 * u - 1.0);
}

inline double hover_rotor_speed(const DroneParams& d, double g) { return rotor_speed_for_thrust(0.25 * d.mass * g, d); }

inline double hover_throttle(const DroneParams& d, double g) { return throttle_for_thrust(d.mass * g, d); }

// Full inner loop at the physics rate: sticks -> motor commands.
struct RateController {
  RateControllerState state;

  MotorCommand update(const ControlCommand& cmd, const Vec3& w_meas, const ControllerParams& p, double dt) {
    const Vec3 w_des = rates_curve(cmd.rates(), p);
    auto [demand, next] = pid_step(p, state, w_des, w_meas, dt);
    state = next;
    return mix(demand, cmd.throttle(), p.mixer_idle);
  }
};

}  // namespace racesim
