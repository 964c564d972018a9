#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "midsim/dynamics.hpp"
#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"
#include "midsim/scene_context.hpp"

namespace midsim {

// Every metric threshold lives here. Comfort bounds and the overspeed
// threshold are the nuPlan defaults.
namespace limits {
inline constexpr double kWrongwayDistance = 3.5;    // m from nearest path
inline constexpr double kMakingProgressRatio = 0.2;
inline constexpr double kExpertProgressFloor = 0.1;  // m
inline constexpr double kTtcBound = 0.95;           // s
inline constexpr double kTtcCone = kPi / 4.0;       // +/- bearing of "ahead"
inline constexpr double kTtcRange = 50.0;           // m
inline constexpr double kSpeedViolationThreshold = 2.23;  // m/s
inline constexpr double kStoppedSpeed = 0.1;        // m/s
inline constexpr double kWrongWayHeading = 120.0 * kPi / 180.0;
inline constexpr double kDirectionFull = 2.0;       // m
inline constexpr double kDirectionHalf = 6.0;       // m
inline constexpr double kMultiLaneFull = 3.4;       // s
inline constexpr double kMultiLaneHalf = 5.7;       // s
inline constexpr double kMinLonAccel = -4.05;       // m/s^2
inline constexpr double kMaxLonAccel = 2.40;
inline constexpr double kMaxLatAccel = 4.89;
inline constexpr double kMaxJerk = 8.37;            // m/s^3
inline constexpr double kMaxYawRate = 0.95;         // rad/s
inline constexpr double kMaxYawAccel = 1.93;        // rad/s^2
}  // namespace limits

enum class TerminationCause : std::uint8_t { kHorizon = 0, kCollision, kOffroad, kRedLight };

inline std::string_view to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::kHorizon: return "horizon";
    case TerminationCause::kCollision: return "collision";
    case TerminationCause::kOffroad: return "offroad";
    case TerminationCause::kRedLight: return "red_light";
  }
  return "horizon";
}

// A completed episode. trajectories is [N][T] aligned with scenario objects;
// entries after termination_step are ignored.
struct Rollout {
  std::shared_ptr<const Scenario> scenario;
  int ego_index = 0;
  std::vector<std::vector<ObjectState>> trajectories;
  std::vector<Action> actions;  // ego actions, index t moves t -> t + 1
  int start_step = kInitSteps;
  int termination_step = kHorizon - 1;
  TerminationCause termination_cause = TerminationCause::kHorizon;
  bool errored = false;
  std::string error;

  std::span<const ObjectState> ego_states() const {
    return trajectories[static_cast<std::size_t>(ego_index)];
  }
  bool operator==(const Rollout& o) const {
    return scenario == o.scenario && ego_index == o.ego_index &&
           trajectories == o.trajectories && actions == o.actions &&
           start_step == o.start_step && termination_step == o.termination_step &&
           termination_cause == o.termination_cause && errored == o.errored &&
           error == o.error;
  }
};

struct MetricValues {
  bool collision = false;
  bool offroad = false;
  bool red_light = false;
  bool wrongway = false;
  bool offroute = false;
  double progress_ratio = 0.0;
  double progress_along_route = 0.0;
  bool making_progress = false;
  bool at_fault_collision = false;
  double ttc_within_bound = 1.0;
  double speed_compliance = 1.0;
  double direction_compliance = 1.0;
  double multiple_lanes = 1.0;
  bool comfort = true;
  bool offroad_evaluable = true;

  bool operator==(const MetricValues&) const = default;
};

// What the kernels read: per-object trajectories indexed by local step, the
// evaluated step range, and the route of the evaluated agent.
struct EpisodeView {
  const SceneContext* scene = nullptr;
  int ego = 0;
  std::vector<std::span<const ObjectState>> objects;
  int first = 0;
  int last = 0;  // inclusive
  double dt = kDt;
  const AgentRoute* route = nullptr;
  std::span<const ObjectState> expert;       // logged ego, same indexing
  std::optional<double> reference_progress;  // overrides the expert gain
  int light_offset = 0;                      // scenario step of local step 0
  std::optional<int> frozen_light_step;      // read every light at this step

  const ObjectState& at(int obj, int k) const {
    return objects[static_cast<std::size_t>(obj)][static_cast<std::size_t>(k)];
  }
  const ObjectMetadata& meta(int obj) const {
    return scene->scenario().objects[static_cast<std::size_t>(obj)].meta;
  }
  OrientedBox box(int obj, int k) const {
    const ObjectState& s = at(obj, k);
    const ObjectMetadata& m = meta(obj);
    return {s.position(), s.yaw, m.length, m.width};
  }
  int num_objects() const { return static_cast<int>(objects.size()); }
  LightState light_state(const TrafficLightTrack& tl, int k) const {
    int t = frozen_light_step ? *frozen_light_step : light_offset + k;
    t = std::clamp(t, 0, static_cast<int>(tl.states.size()) - 1);
    return tl.states.empty() ? LightState::kUnknown : tl.states[static_cast<std::size_t>(t)];
  }
};

inline EpisodeView make_view(const Rollout& r, const SceneContext& scene) {
  EpisodeView v;
  v.scene = &scene;
  v.ego = r.ego_index;
  v.objects.reserve(r.trajectories.size());
  for (const auto& t : r.trajectories) v.objects.emplace_back(t);
  v.first = r.start_step;
  v.last = r.termination_step;
  v.dt = r.scenario->dt;
  v.route = scene.route_for(r.ego_index);
  v.expert = r.scenario->objects[static_cast<std::size_t>(r.ego_index)].states;
  return v;
}

// ---- stepwise primitives, shared by the environment and post-hoc kernels ----

// Lowest-index object overlapping the ego at step k, or -1.
inline int collision_partner_at(const EpisodeView& v, int k) {
  if (!v.at(v.ego, k).valid) return -1;
  const OrientedBox ego = v.box(v.ego, k);
  for (int j = 0; j < v.num_objects(); ++j) {
    if (j == v.ego || !v.at(j, k).valid) continue;
    if (boxes_overlap(ego, v.box(j, k))) return j;
  }
  return -1;
}

inline bool offroad_at(const EpisodeView& v, int k) {
  return v.at(v.ego, k).valid && v.scene->box_offroad(v.box(v.ego, k));
}

inline double route_progress_at(const Polyline& route, Vec2 p) {
  return route.project(p).s;
}

// Red light crossed while moving from arclength s_prev to s_cur at step k.
inline bool red_light_crossed(const EpisodeView& v, double s_prev, double s_cur, int k) {
  if (v.route == nullptr) return false;
  for (const RouteLight& rl : v.route->lights) {
    if (s_prev < rl.s && rl.s <= s_cur) {
      const auto& tl = v.scene->scenario().traffic_lights[rl.light];
      if (v.light_state(tl, k) == LightState::kRed) return true;
    }
  }
  return false;
}

inline double distance_to_paths(std::span<const Polyline> paths, Vec2 p) {
  double best = kInf;
  for (const Polyline& line : paths) best = std::min(best, line.project(p).distance);
  return best;
}

// Finite-difference comfort over a contiguous run of states.
inline bool comfortable(std::span<const ObjectState> states, double dt) {
  const std::size_t n = states.size();
  if (n < 3) return true;
  std::vector<double> accel(n - 1);
  std::vector<double> yaw_rate(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double v0 = states[i].speed();
    const double v1 = states[i + 1].speed();
    accel[i] = (v1 - v0) / dt;
    yaw_rate[i] = wrap_angle(states[i + 1].yaw - states[i].yaw) / dt;
    const double lat = 0.5 * (v0 + v1) * yaw_rate[i];
    if (accel[i] < limits::kMinLonAccel || accel[i] > limits::kMaxLonAccel) return false;
    if (std::abs(lat) > limits::kMaxLatAccel) return false;
    if (std::abs(yaw_rate[i]) > limits::kMaxYawRate) return false;
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (std::abs((accel[i + 1] - accel[i]) / dt) > limits::kMaxJerk) return false;
    if (std::abs((yaw_rate[i + 1] - yaw_rate[i]) / dt) > limits::kMaxYawAccel) return false;
  }
  return true;
}

// Time until the constant-velocity projections of the ego footprint and an
// agent footprint first overlap, over agents inside the forward cone.
// Infinite when nothing is on a collision course.
inline double time_to_collision_at(const EpisodeView& v, int k) {
  const ObjectState& e = v.at(v.ego, k);
  if (!e.valid) return kInf;
  const Vec2 heading = heading_vector(e.yaw);
  const OrientedBox ego = v.box(v.ego, k);
  double best = kInf;
  for (int j = 0; j < v.num_objects(); ++j) {
    if (j == v.ego) continue;
    const ObjectState& o = v.at(j, k);
    if (!o.valid) continue;
    const Vec2 rel = o.position() - e.position();
    const double range = norm(rel);
    if (range > limits::kTtcRange) continue;
    if (range > 1e-9) {
      const double bearing = std::atan2(cross(heading, rel), dot(heading, rel));
      if (std::abs(bearing) > limits::kTtcCone) continue;
    }
    best = std::min(best, time_to_overlap(ego, v.box(j, k), o.velocity() - e.velocity()));
  }
  return best;
}

// ---- episode kernels ----

struct CollisionInfo {
  bool collided = false;
  int step = -1;
  int partner = -1;
};

inline CollisionInfo overlap_collision(const EpisodeView& v) {
  for (int k = v.first; k <= v.last; ++k) {
    if (const int j = collision_partner_at(v, k); j >= 0) return {true, k, j};
  }
  return {};
}

struct OffroadInfo {
  bool offroad = false;
  bool evaluable = true;
  int step = -1;
};

inline OffroadInfo offroad(const EpisodeView& v) {
  if (!v.scene->has_road_edges()) return {false, false, -1};
  for (int k = v.first; k <= v.last; ++k) {
    if (offroad_at(v, k)) return {true, true, k};
  }
  return {};
}

inline bool red_light_violation(const EpisodeView& v) {
  if (v.route == nullptr || v.route->lights.empty()) return false;
  double prev = route_progress_at(v.route->line, v.at(v.ego, v.first).position());
  for (int k = v.first + 1; k <= v.last; ++k) {
    const double cur = route_progress_at(v.route->line, v.at(v.ego, k).position());
    if (red_light_crossed(v, prev, cur, k)) return true;
    prev = cur;
  }
  return false;
}

struct RouteMetrics {
  bool wrongway = false;
  bool offroute = false;
  double progress_ratio = 0.0;
  double progress_along_route = 0.0;
  bool making_progress = false;
  double ego_progress = 0.0;
  double expert_progress = 0.0;
};

inline RouteMetrics route_metrics(const EpisodeView& v) {
  RouteMetrics m;
  if (v.route == nullptr) return m;
  const Polyline& line = v.route->line;
  const Polyline on_route[] = {line};
  for (int k = v.first; k <= v.last; ++k) {
    const Vec2 p = v.at(v.ego, k).position();
    if (distance_to_paths(on_route, p) > limits::kWrongwayDistance) m.offroute = true;
    if (distance_to_paths(v.route->all_paths, p) > limits::kWrongwayDistance) m.wrongway = true;
  }
  m.ego_progress = route_progress_at(line, v.at(v.ego, v.last).position()) -
                   route_progress_at(line, v.at(v.ego, v.first).position());
  double reference = 0.0;
  if (v.reference_progress) {
    reference = *v.reference_progress;
  } else if (!v.expert.empty()) {
    int start = v.first;
    int end = -1;
    for (int k = static_cast<int>(v.expert.size()) - 1; k >= start; --k) {
      if (v.expert[static_cast<std::size_t>(k)].valid) {
        end = k;
        break;
      }
    }
    if (end >= start && v.expert[static_cast<std::size_t>(start)].valid) {
      reference = route_progress_at(line, v.expert[static_cast<std::size_t>(end)].position()) -
                  route_progress_at(line, v.expert[static_cast<std::size_t>(start)].position());
    }
  }
  m.expert_progress = reference;
  m.progress_ratio = std::max(0.0, m.ego_progress) /
                     std::max(reference, limits::kExpertProgressFloor);
  m.progress_along_route = std::min(1.0, m.progress_ratio);
  m.making_progress = m.progress_along_route > limits::kMakingProgressRatio;
  return m;
}

// Responsibility rules, applied in order: stopped partner, stopped ego,
// ego on multiple lanes, then which half of the ego took the contact.
inline bool at_fault(const EpisodeView& v, const CollisionInfo& c) {
  if (!c.collided) return false;
  const ObjectState& partner = v.at(c.partner, c.step);
  const ObjectState& ego = v.at(v.ego, c.step);
  if (partner.speed() < limits::kStoppedSpeed) return true;
  if (ego.speed() < limits::kStoppedSpeed) return false;
  const OrientedBox ego_box = v.box(v.ego, c.step);
  if (v.scene->occupies_multiple_lanes(ego_box)) return true;
  const auto a = ego_box.corners();
  const auto b = v.box(c.partner, c.step).corners();
  const std::vector<Vec2> overlap = clip_convex(b, a);
  const Vec2 contact = overlap.empty() ? v.box(c.partner, c.step).center
                                       : polygon_centroid(overlap);
  return Frame(ego_box.center, ego_box.yaw).to_local(contact).x >= 0.0;
}

inline double min_time_to_collision(const EpisodeView& v) {
  double best = kInf;
  for (int k = v.first; k <= v.last; ++k) best = std::min(best, time_to_collision_at(v, k));
  return best;
}

inline double ttc_within_bound(const EpisodeView& v) {
  return min_time_to_collision(v) >= limits::kTtcBound ? 1.0 : 0.0;
}

inline double speed_compliance(const EpisodeView& v) {
  double violation = 0.0;
  int steps = 0;
  for (int k = v.first; k <= v.last; ++k, ++steps) {
    const ObjectState& e = v.at(v.ego, k);
    if (!e.valid) continue;
    const double limit = v.scene->speed_limit_at(e.position());
    if (limit > 0.0) violation += std::max(0.0, e.speed() - limit) * v.dt;
  }
  const double duration = steps * v.dt;
  if (duration <= 0.0) return 1.0;
  return std::max(0.0, 1.0 - violation / (std::max(limits::kSpeedViolationThreshold, 1e-3) *
                                          duration));
}

inline bool heading_opposes_lane(const SceneContext& scene, const ObjectState& s) {
  const NearestLane lane = scene.nearest_lane(s.position());
  if (lane.distance > kLaneHalfWidth) return false;
  const Vec2 h = heading_vector(s.yaw);
  const double diff = std::abs(std::atan2(cross(lane.direction, h), dot(lane.direction, h)));
  return diff > limits::kWrongWayHeading;
}

inline double wrong_way_distance(const EpisodeView& v) {
  double dist = 0.0;
  for (int k = v.first; k < v.last; ++k) {
    const ObjectState& a = v.at(v.ego, k);
    const ObjectState& b = v.at(v.ego, k + 1);
    if (!a.valid || !b.valid) continue;
    if (heading_opposes_lane(*v.scene, b)) dist += distance(a.position(), b.position());
  }
  return dist;
}

inline double three_level_score(double value, double full, double half) {
  if (value <= full) return 1.0;
  if (value <= half) return 0.5;
  return 0.0;
}

inline double direction_compliance(const EpisodeView& v) {
  return three_level_score(wrong_way_distance(v), limits::kDirectionFull,
                           limits::kDirectionHalf);
}

inline double multiple_lanes_time(const EpisodeView& v) {
  int steps = 0;
  for (int k = v.first; k <= v.last; ++k) {
    if (v.at(v.ego, k).valid && v.scene->occupies_multiple_lanes(v.box(v.ego, k))) ++steps;
  }
  return steps * v.dt;
}

inline double multiple_lanes(const EpisodeView& v) {
  return three_level_score(multiple_lanes_time(v), limits::kMultiLaneFull,
                           limits::kMultiLaneHalf);
}

inline bool comfort(const EpisodeView& v) {
  const auto& ego = v.objects[static_cast<std::size_t>(v.ego)];
  if (v.last - v.first + 1 < 3) return true;
  return comfortable(ego.subspan(static_cast<std::size_t>(v.first),
                                 static_cast<std::size_t>(v.last - v.first + 1)),
                     v.dt);
}

inline MetricValues compute_metrics(const EpisodeView& v) {
  MetricValues m;
  const CollisionInfo c = overlap_collision(v);
  m.collision = c.collided;
  m.at_fault_collision = at_fault(v, c);
  const OffroadInfo off = offroad(v);
  m.offroad = off.offroad;
  m.offroad_evaluable = off.evaluable;
  m.red_light = red_light_violation(v);
  const RouteMetrics r = route_metrics(v);
  m.wrongway = r.wrongway;
  m.offroute = r.offroute;
  m.progress_ratio = r.progress_ratio;
  m.progress_along_route = r.progress_along_route;
  m.making_progress = r.making_progress;
  m.ttc_within_bound = ttc_within_bound(v);
  m.speed_compliance = speed_compliance(v);
  m.direction_compliance = direction_compliance(v);
  m.multiple_lanes = multiple_lanes(v);
  m.comfort = comfort(v);
  return m;
}

inline MetricValues compute_metrics(const Rollout& r, const SceneContext& scene) {
  return compute_metrics(make_view(r, scene));
}

}  // namespace midsim
