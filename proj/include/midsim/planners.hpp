#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "midsim/dynamics.hpp"
#include "midsim/geometry.hpp"
#include "midsim/metrics.hpp"
#include "midsim/scene_context.hpp"
#include "midsim/scoring.hpp"
#include "midsim/simulator_state.hpp"

namespace midsim {

inline constexpr double kFallbackSpeedLimit = 13.4;  // m/s, used when a lane has none

// Stateless driving policy. One instance may drive many agents concurrently.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual Action act(const SimulatorState& state, const SceneContext& scene,
                     int agent) const = 0;
};

// Log replay through the inverse model: the action that takes the current
// simulated state to the logged state one step ahead.
class ExpertPolicy final : public Policy {
 public:
  std::string_view name() const override { return "expert"; }
  Action act(const SimulatorState& state, const SceneContext& scene,
             int agent) const override {
    const int t = state.timestep();
    const auto& log = scene.scenario().objects[static_cast<std::size_t>(agent)].states;
    if (t + 1 >= static_cast<int>(log.size())) return {};
    const ObjectState& next = log[static_cast<std::size_t>(t + 1)];
    const ObjectState& cur = state.state(agent, t);
    if (!next.valid || !cur.valid) return {};
    return invert_step(cur, next, scene.scenario().dt);
  }
};

struct IdmParams {
  double v_desired = kFallbackSpeedLimit;
  double s0 = 2.0;
  double headway = 1.5;
  double a_max = 1.5;
  double b_comfort = 2.0;
  double delta = 4.0;
  bool operator==(const IdmParams&) const = default;
};

// Intelligent Driver Model. gap = kInf means free road.
inline double idm_accel(double gap, double v, double v_lead, const IdmParams& p) {
  if (!(gap > 0.0)) return -kMaxAccel;
  const double free_term = std::pow(std::max(v, 0.0) / p.v_desired, p.delta);
  if (std::isinf(gap)) return p.a_max * (1.0 - free_term);
  const double s_star =
      p.s0 + std::max(0.0, v * p.headway + v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_comfort)));
  const double ratio = s_star / gap;
  return p.a_max * (1.0 - free_term - ratio * ratio);
}

struct Leader {
  double gap = kInf;  // bumper to leader (or stop line)
  double speed = 0.0;  // along the path
  int object = -1;     // -1 for a red light or no leader
};

// One frame of the world as the leader search sees it: positions are world
// coordinates, validity per object.
struct LeaderQuery {
  const Polyline* path = nullptr;
  double ego_s = 0.0;
  double ego_half_length = 2.25;
  double corridor = kLaneHalfWidth;
};

// First object whose center lies inside the path corridor ahead of the ego,
// or a red stop line, whichever is closer.
template <typename StateAt>
Leader find_leader(const LeaderQuery& q, const SceneContext& scene, int agent, int num_objects,
                   StateAt&& state_at, const std::vector<RouteLight>& lights,
                   std::optional<int> light_step) {
  Leader best;
  const Scenario& sc = scene.scenario();
  for (int j = 0; j < num_objects; ++j) {
    if (j == agent) continue;
    const ObjectState& o = state_at(j);
    if (!o.valid) continue;
    const auto proj = q.path->project(o.position());
    if (proj.distance > q.corridor || proj.s <= q.ego_s) continue;
    const double half = 0.5 * sc.objects[static_cast<std::size_t>(j)].meta.length;
    const double gap = proj.s - q.ego_s - q.ego_half_length - half;
    if (gap < best.gap) {
      best.gap = gap;
      best.speed = dot(o.velocity(), q.path->direction_at(proj.s));
      best.object = j;
    }
  }
  if (light_step) {
    for (const RouteLight& rl : lights) {
      const auto& tl = sc.traffic_lights[rl.light];
      if (tl.states.empty()) continue;
      const auto idx = std::clamp<std::size_t>(static_cast<std::size_t>(*light_step), 0,
                                               tl.states.size() - 1);
      if (tl.states[idx] != LightState::kRed) continue;
      const double gap = rl.s - q.ego_s - q.ego_half_length;
      // A stop line already under the bumper is treated as committed.
      if (gap <= 0.0 || gap >= best.gap) continue;
      best.gap = gap;
      best.speed = 0.0;
      best.object = -1;
    }
  }
  return best;
}

struct PurePursuit {
  double lookahead = 5.0;  // m

  // Curvature that steers the pose onto the point `lookahead` ahead of its
  // projection on the path.
  double curvature(const Polyline& path, double s, Vec2 position, double yaw) const {
    const Vec2 target = path.point_at(s + lookahead);
    const Vec2 local = Frame(position, yaw).to_local(target);
    const double l2 = dot(local, local);
    if (l2 < 1e-6) return 0.0;
    return 2.0 * local.y / l2;
  }
};

inline double desired_speed_at(const SceneContext& scene, Vec2 p) {
  const double limit = scene.speed_limit_at(p);
  return limit > 0.0 ? limit : kFallbackSpeedLimit;
}

// IDM along the agent's on-route centerline. v_desired comes from the lane
// speed limit unless fixed_speed is set.
class IdmPolicy final : public Policy {
 public:
  IdmPolicy() = default;
  explicit IdmPolicy(IdmParams params, bool use_lane_limit = true, PurePursuit tracker = {})
      : params_(params), use_lane_limit_(use_lane_limit), tracker_(tracker) {}

  std::string_view name() const override { return "idm"; }
  const IdmParams& params() const { return params_; }

  Action act(const SimulatorState& state, const SceneContext& scene,
             int agent) const override {
    const int t = state.timestep();
    const ObjectState& me = state.state(agent, t);
    const AgentRoute* route = scene.route_for(agent);
    if (!me.valid || route == nullptr) return Action::emergency_brake();
    IdmParams p = params_;
    if (use_lane_limit_) p.v_desired = desired_speed_at(scene, me.position());
    const Polyline& path = route->line;
    const double s = path.project(me.position()).s;
    LeaderQuery q{&path, s, 0.5 * state.meta(agent).length};
    const Leader lead =
        find_leader(q, scene, agent, static_cast<int>(state.num_objects()),
                    [&](int j) -> const ObjectState& { return state.state(j, t); },
                    route->lights, t);
    return {idm_accel(lead.gap, me.speed(), lead.speed, p),
            tracker_.curvature(path, s, me.position(), me.yaw)};
  }

 private:
  IdmParams params_{};
  bool use_lane_limit_ = true;
  PurePursuit tracker_{};
};

// Each object moves on with its current velocity and heading. Entry [j][k] is
// object j, k steps after the state's current step (k = 0 is now).
inline std::vector<std::vector<ObjectState>> forecast_constant_velocity(
    const SimulatorState& state, int horizon) {
  const int t = state.timestep();
  const double dt = state.scenario().dt;
  std::vector<std::vector<ObjectState>> out(state.num_objects());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const ObjectState& s = state.state(static_cast<int>(j), t);
    auto& traj = out[j];
    traj.resize(static_cast<std::size_t>(horizon) + 1);
    if (!s.valid) continue;
    for (int k = 0; k <= horizon; ++k) {
      traj[static_cast<std::size_t>(k)] = {s.x + s.vx * k * dt, s.y + s.vy * k * dt, s.yaw,
                                           s.vx, s.vy, true};
    }
  }
  return out;
}

struct PdmConfig {
  std::vector<double> lateral_offsets{-1.0, 0.0, 1.0};
  std::vector<double> speed_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  double horizon = 4.0;    // s
  double ttc_brake = 2.0;  // s
  IdmParams idm{};
  PurePursuit tracker{};
  bool operator==(const PdmConfig& o) const {
    return lateral_offsets == o.lateral_offsets && speed_fractions == o.speed_fractions &&
           horizon == o.horizon && ttc_brake == o.ttc_brake && idm == o.idm &&
           tracker.lookahead == o.tracker.lookahead;
  }
};

struct PdmCandidate {
  double offset = 0.0;
  double fraction = 0.0;
  double target_speed = 0.0;
  std::vector<ObjectState> states;  // ego over the horizon, [0] = now
  Action first_action;
  bool collides = false;
  double progress = 0.0;
  double min_ttc = kInf;
  MetricValues metrics;
  double score = 0.0;
};

struct PdmDecision {
  Action action;
  int chosen = -1;  // index into candidates; -1 when no candidate is valid
  bool emergency = false;
  std::vector<PdmCandidate> candidates;
};

// Scores the candidate grid against a constant-velocity forecast with the
// V-Max episode score and returns the first action of the winner.
inline PdmDecision pdm_decide(const SimulatorState& state, const SceneContext& scene,
                              int agent, const PdmConfig& cfg) {
  PdmDecision out;
  const int t = state.timestep();
  const double dt = state.scenario().dt;
  const ObjectState& me = state.state(agent, t);
  const AgentRoute* route = scene.route_for(agent);
  if (!me.valid || route == nullptr) {
    out.action = Action::emergency_brake();
    out.emergency = true;
    return out;
  }
  const int steps = static_cast<int>(std::lround(cfg.horizon / dt));
  auto forecast = forecast_constant_velocity(state, steps);
  const double limit = desired_speed_at(scene, me.position());
  const double half_length = 0.5 * state.meta(agent).length;
  const int n = static_cast<int>(state.num_objects());

  std::vector<Polyline> paths;
  paths.reserve(cfg.lateral_offsets.size());
  for (double off : cfg.lateral_offsets) {
    paths.push_back(off == 0.0 ? route->line : route->line.offset(off));
  }

  for (std::size_t pi = 0; pi < paths.size(); ++pi) {
    const Polyline& path = paths[pi];
    for (double frac : cfg.speed_fractions) {
      PdmCandidate c;
      c.offset = cfg.lateral_offsets[pi];
      c.fraction = frac;
      c.target_speed = frac * limit;
      IdmParams p = cfg.idm;
      p.v_desired = std::max(c.target_speed, 1e-3);
      c.states.reserve(static_cast<std::size_t>(steps) + 1);
      EgoKinematicState k = kinematic_from(me);
      c.states.push_back(object_state_from(k));
      for (int i = 0; i < steps; ++i) {
        const double s = path.project({k.x, k.y}).s;
        LeaderQuery q{&path, s, half_length};
        const Leader lead = find_leader(
            q, scene, agent, n,
            [&](int j) -> const ObjectState& {
              return forecast[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            },
            route->lights, t);
        const Action a(idm_accel(lead.gap, k.speed, lead.speed, p),
                       cfg.tracker.curvature(path, s, {k.x, k.y}, k.yaw));
        if (i == 0) c.first_action = a;
        k = step_bicycle(k, a, dt);
        c.states.push_back(object_state_from(k));
      }
      out.candidates.push_back(std::move(c));
    }
  }

  // Evaluate with the same kernels as post-hoc metrics; only the ego slot of
  // the forecast differs between candidates.
  EpisodeView view;
  view.scene = &scene;
  view.ego = agent;
  view.first = 0;
  view.last = steps;
  view.dt = dt;
  view.route = route;
  view.frozen_light_step = t;
  view.objects.reserve(forecast.size());
  for (const auto& f : forecast) view.objects.emplace_back(f);
  double best_progress = 0.0;
  for (PdmCandidate& c : out.candidates) {
    view.objects[static_cast<std::size_t>(agent)] = c.states;
    c.progress = route->line.project(c.states.back().position()).s -
                 route->line.project(c.states.front().position()).s;
    best_progress = std::max(best_progress, c.progress);
    c.collides = overlap_collision(view).collided;
  }
  view.reference_progress = best_progress;
  for (PdmCandidate& c : out.candidates) {
    view.objects[static_cast<std::size_t>(agent)] = c.states;
    c.metrics = compute_metrics(view);
    c.min_ttc = min_time_to_collision(view);
    c.score = episode_score(c.metrics, ScoreVariant::kVmax);
  }

  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    const PdmCandidate& c = out.candidates[i];
    if (c.collides) continue;
    if (out.chosen < 0) {
      out.chosen = static_cast<int>(i);
      continue;
    }
    const PdmCandidate& b = out.candidates[static_cast<std::size_t>(out.chosen)];
    // Candidates that keep min TTC above the braking threshold win over
    // those that would trigger the emergency brake.
    const bool c_safe = c.min_ttc >= cfg.ttc_brake;
    const bool b_safe = b.min_ttc >= cfg.ttc_brake;
    const bool better =
        (c_safe && !b_safe) ||
        (c_safe == b_safe &&
         (c.score > b.score ||
          (c.score == b.score &&
           (std::abs(c.offset) < std::abs(b.offset) ||
            (std::abs(c.offset) == std::abs(b.offset) && c.fraction < b.fraction)))));
    if (better) out.chosen = static_cast<int>(i);
  }

  // Emergency braking keeps the centerline steering so the ego stays in lane.
  const double s_now = route->line.project(me.position()).s;
  const double keep_lane = cfg.tracker.curvature(route->line, s_now, me.position(), me.yaw);
  if (out.chosen < 0) {
    out.action = Action(-kMaxAccel, keep_lane);
    out.emergency = true;
    return out;
  }
  const PdmCandidate& chosen = out.candidates[static_cast<std::size_t>(out.chosen)];
  if (chosen.min_ttc < cfg.ttc_brake) {
    out.action = Action(-kMaxAccel, keep_lane);
    out.emergency = true;
  } else {
    out.action = chosen.first_action;
  }
  return out;
}

class PdmClosedPolicy final : public Policy {
 public:
  PdmClosedPolicy() = default;
  explicit PdmClosedPolicy(PdmConfig cfg) : cfg_(std::move(cfg)) {}
  std::string_view name() const override { return "pdm"; }
  const PdmConfig& config() const { return cfg_; }
  Action act(const SimulatorState& state, const SceneContext& scene,
             int agent) const override {
    return pdm_decide(state, scene, agent, cfg_).action;
  }

 private:
  PdmConfig cfg_{};
};

}  // namespace midsim
