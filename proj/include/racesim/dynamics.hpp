#pragma once

// Rigid-body quadrotor with first-order rotor lag.
//
// Rotor speeds are carried in rev/s to match the motor/thrust polynomials;
// the gyroscopic reaction term converts rotor acceleration to rad/s^2.

#include <array>
#include <utility>

#include "racesim/config.hpp"
#include "racesim/errors.hpp"
#include "racesim/math.hpp"

namespace racesim {

struct RigidBodyState {
  Vec3 p = Vec3::Zero();         // world position
  Quat q = Quat::Identity();     // world <- body
  Vec3 v = Vec3::Zero();         // world linear velocity
  Vec3 w = Vec3::Zero();         // body angular velocity

  Mat3 rotation() const { return q.toRotationMatrix(); }
  Vec3 body_velocity() const { return q.conjugate() * v; }
  bool finite() const { return p.allFinite() && q.coeffs().allFinite() && v.allFinite() && w.allFinite(); }
};

struct RotorState {
  Vec4 omega = Vec4::Zero();    // current, rev/s
  Vec4 omega_s = Vec4::Zero();  // steady-state target, rev/s
};

// Body-frame force and torque.
struct Wrench {
  Vec3 f = Vec3::Zero();
  Vec3 tau = Vec3::Zero();

  Wrench operator+(const Wrench& o) const { return {f + o.f, tau + o.tau}; }
  bool finite() const { return f.allFinite() && tau.allFinite(); }
};

inline Wrench actuator_wrench(const RotorState& rotors, const Vec4& rotor_accel, const DroneParams& drone) {
  Wrench out;
  for (int i = 0; i < 4; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double thrust = polyval(drone.thrust_poly, rotors.omega[i]);
    const double drag_torque = polyval(drone.torque_poly, rotors.omega[i]);
    const Vec3 f_i(0.0, 0.0, thrust);
    const double zeta = drone.spin_directions[k];
    out.f += f_i;
    out.tau += drone.rotor_positions[k].cross(f_i);
    out.tau.z() += zeta * drag_torque + zeta * drone.rotor_inertia * kTwoPi * rotor_accel[i];
  }
  return out;
}

// Quadratic terms are sign-preserving (|x| * x) so drag always opposes motion.
inline Wrench drag_wrench(const Vec3& v_body, const Vec3& w_body, const DragParams& drag) {
  const double half_rho = 0.5 * drag.air_density;
  Wrench out;
  out.f = -half_rho * drag.area_t *
          (drag.c0.cwiseProduct(v_body.cwiseAbs().cwiseProduct(v_body)) + drag.c1.cwiseProduct(v_body));
  out.tau = -half_rho * drag.area_r *
            (drag.c2.cwiseProduct(w_body.cwiseAbs().cwiseProduct(w_body)) + drag.c3.cwiseProduct(w_body));
  return out;
}

// Exact solution of dOmega/dt = k_r (Omega_s - Omega) over dt. The returned
// acceleration is evaluated at the start of the step.
inline std::pair<RotorState, Vec4> rotor_step(const RotorState& rotors, double k_r, double dt) {
  const Vec4 accel = k_r * (rotors.omega_s - rotors.omega);
  const double decay = std::exp(-k_r * dt);
  RotorState next = rotors;
  next.omega = rotors.omega_s + (rotors.omega - rotors.omega_s) * decay;
  return {next, accel};
}

// Semi-implicit Euler; attitude advanced with the exponential map of the
// updated body rate.
inline RigidBodyState rigid_body_step(const RigidBodyState& s, const Wrench& total, const DroneParams& drone,
                                      double g, double dt) {
  if (!total.finite()) throw ModelError("rigid_body_step: non-finite wrench");
  const Mat3 r_wb = s.q.toRotationMatrix();
  RigidBodyState n;
  const Vec3 accel = Vec3(0.0, 0.0, -g) + r_wb * total.f / drone.mass;
  n.v = s.v + dt * accel;
  n.p = s.p + dt * n.v;
  const Vec3 jw = drone.inertia.cwiseProduct(s.w);
  const Vec3 w_dot = (total.tau - s.w.cross(jw)).cwiseQuotient(drone.inertia);
  n.w = s.w + dt * w_dot;
  n.q = s.q * exp_map(n.w * dt);
  n.q.normalize();
  return n;
}

// Collision geometry: body-frame AABB carried along with the drone pose.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 rot = Mat3::Identity();
  Vec3 half = Vec3::Ones();

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
      const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
      out[static_cast<std::size_t>(i)] = center + rot * s.cwiseProduct(half);
    }
    return out;
  }
};

inline OrientedBox oriented_collision_box(const RigidBodyState& s, const DroneParams& drone) {
  return {s.p, s.q.toRotationMatrix(), drone.collision_half_extents};
}

}  // namespace racesim
