#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"

namespace midsim {

inline constexpr double kMaxAccel = 6.0;       // m/s^2
inline constexpr double kMaxCurvature = 0.3;   // 1/m
inline constexpr double kSpeedFloor = 0.1;     // m/s, below it inversion reports zero steer

// Ego control: longitudinal acceleration and path curvature. Components are
// clamped to the actuator envelope on construction; non-finite inputs become 0.
class Action {
 public:
  constexpr Action() = default;
  Action(double accel, double steer)
      : accel_(sanitize(accel, kMaxAccel)), steer_(sanitize(steer, kMaxCurvature)) {}

  double accel() const { return accel_; }
  double steer() const { return steer_; }
  bool operator==(const Action&) const = default;

  static Action emergency_brake() { return {-kMaxAccel, 0.0}; }

 private:
  static double sanitize(double v, double bound) {
    return std::isfinite(v) ? std::clamp(v, -bound, bound) : 0.0;
  }

  double accel_ = 0.0;
  double steer_ = 0.0;
};

struct EgoKinematicState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double speed = 0.0;

  bool operator==(const EgoKinematicState&) const = default;
};

inline EgoKinematicState kinematic_from(const ObjectState& s) {
  return {s.x, s.y, s.yaw, s.speed()};
}

inline ObjectState object_state_from(const EgoKinematicState& k) {
  return {k.x, k.y, k.yaw, k.speed * std::cos(k.yaw), k.speed * std::sin(k.yaw), true};
}

// Midpoint integration of the kinematic bicycle with curvature steering.
inline EgoKinematicState step_bicycle(const EgoKinematicState& s, const Action& a,
                                      double dt) {
  const double v0 = std::max(0.0, s.speed);
  const double v1 = std::max(0.0, v0 + a.accel() * dt);
  const double v_mid = 0.5 * (v0 + v1);
  const double dyaw = v_mid * a.steer() * dt;
  const double yaw_mid = s.yaw + 0.5 * dyaw;
  return {s.x + v_mid * std::cos(yaw_mid) * dt, s.y + v_mid * std::sin(yaw_mid) * dt,
          wrap_angle(s.yaw + dyaw), v1};
}

// Action that takes `from` to the speed and heading of `to` in one step.
inline Action invert_step(const ObjectState& from, const ObjectState& to, double dt) {
  const double v0 = from.speed();
  const double v1 = to.speed();
  const double accel = (v1 - v0) / dt;
  const double v_mid = 0.5 * (v0 + v1);
  const double steer =
      v_mid < kSpeedFloor ? 0.0 : wrap_angle(to.yaw - from.yaw) / (v_mid * dt);
  return {accel, steer};
}

inline std::vector<Action> invert_trajectory(std::span<const ObjectState> states,
                                             double dt) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!states[i].valid) {
      throw Error("invert_trajectory: invalid state at index " + std::to_string(i));
    }
  }
  std::vector<Action> actions;
  if (states.size() < 2) return actions;
  actions.reserve(states.size() - 1);
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    actions.push_back(invert_step(states[i], states[i + 1], dt));
  }
  return actions;
}

// States[0] is the start; one extra state per action.
inline std::vector<EgoKinematicState> rollout_bicycle(const EgoKinematicState& start,
                                                      std::span<const Action> actions,
                                                      double dt) {
  std::vector<EgoKinematicState> out;
  out.reserve(actions.size() + 1);
  out.push_back(start);
  for (const Action& a : actions) out.push_back(step_bicycle(out.back(), a, dt));
  return out;
}

}  // namespace midsim
