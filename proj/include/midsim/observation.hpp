#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"
#include "midsim/scene_context.hpp"
#include "midsim/simulator_state.hpp"

namespace midsim {

struct ObservationConfig {
  int history_steps = 1;
  int num_objects = 8;
  int roadgraph_top_k = 200;
  double roadgraph_interval = 2.0;
  double box_front = 50.0;
  double box_back = 5.0;
  double box_side = 20.0;
  int path_points = 10;
  double path_spacing = 5.0;
  int traffic_lights = 5;
  double noise_std = 0.0;
  double dropout_prob = 0.0;

  // Empty when the config is usable.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (history_steps != 1 && history_steps != 3 && history_steps != 5) {
      out.emplace_back("history_steps must be 1, 3 or 5");
    }
    if (num_objects < 1) out.emplace_back("num_objects must be >= 1");
    if (roadgraph_top_k < 1) out.emplace_back("roadgraph_top_k must be >= 1");
    if (path_points < 1) out.emplace_back("path_points must be >= 1");
    if (traffic_lights < 1) out.emplace_back("traffic_lights must be >= 1");
    if (!(roadgraph_interval > 0.0)) out.emplace_back("roadgraph_interval must be > 0");
    if (!(box_front > 0.0) || !(box_back > 0.0) || !(box_side > 0.0)) {
      out.emplace_back("box dimensions must be > 0");
    }
    if (box_front > 1e5 || box_back > 1e5 || box_side > 1e5) {
      out.emplace_back("box dimensions must be <= 100000 m");
    }
    if (!(path_spacing > 0.0)) out.emplace_back("path_spacing must be > 0");
    if (!(noise_std >= 0.0)) out.emplace_back("noise_std must be >= 0");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
      out.emplace_back("dropout_prob must be in [0, 1]");
    }
    return out;
  }
  bool operator==(const ObservationConfig&) const = default;
};

// Feature layouts, one row per slot:
//   object:        x, y, vx, vy, cos(yaw), sin(yaw), length, width, valid
//   roadgraph:     x, y, dir_x, dir_y, type one-hot (7), speed_limit, valid
//   traffic light: x, y, state one-hot (4), valid
//   path target:   x, y
inline constexpr std::size_t kObjectFeatures = 9;
inline constexpr std::size_t kRoadgraphFeatures = 4 + kNumRoadgraphTypes + 2;
inline constexpr std::size_t kTrafficLightFeatures = 2 + kNumLightStates + 1;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims) { reset(std::move(dims)); }
  // Zero-filled with the given shape, keeping the allocation when it fits.
  void reset(std::vector<std::size_t> dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    shape = std::move(dims);
    data.assign(n, 0.0);
  }
  double* row(std::size_t flat_row) { return data.data() + flat_row * shape.back(); }
  const double* row(std::size_t flat_row) const {
    return data.data() + flat_row * shape.back();
  }
  bool operator==(const Tensor&) const = default;
};

struct Observation {
  Tensor objects;         // [history_steps, num_objects, kObjectFeatures]
  Tensor roadgraph;       // [roadgraph_top_k, kRoadgraphFeatures]
  Tensor traffic_lights;  // [traffic_lights, kTrafficLightFeatures]
  Tensor path_target;     // [path_points, 2]
  bool operator==(const Observation&) const = default;
};

namespace detail {

inline bool inside_view(Vec2 local, const ObservationConfig& cfg) {
  return local.x <= cfg.box_front && local.x >= -cfg.box_back &&
         std::abs(local.y) <= cfg.box_side;
}

// Distances are ranked at micrometre resolution so near-ties resolve by key
// rather than by rounding noise, which keeps ranking frame invariant. For the
// non-negative inputs used here this equals std::round.
inline double rank_distance(double d) {
  return static_cast<double>(static_cast<std::int64_t>(d * 1e6 + 0.5));
}

// Roadgraph ranking packs the distance above the point index; the box limit
// keeps micrometre distances below 2^40.
inline constexpr int kIndexBits = 24;

struct Ranked {
  double dist;
  std::size_t key;  // tie-breaker
  std::size_t index;
  bool operator<(const Ranked& o) const {
    return dist < o.dist || (dist == o.dist && key < o.key);
  }
};

}  // namespace detail

// Ego-centric features for object `agent` at the state's current step.
// Writes into `obs`, reusing its buffers.
inline void extract_observation_into(Observation& obs, const SimulatorState& state,
                                     const SceneContext& scene, int agent,
                                     const ObservationConfig& cfg, std::uint64_t seed = 0) {
  const int t = state.timestep();
  const ObjectState& me = state.state(agent, t);
  if (!me.valid) throw Error("observed agent is invalid at the current step");
  const AgentRoute* route = scene.route_for(agent);
  if (route == nullptr) throw Error("observed agent has no on-route path");

  const Frame frame(me.position(), me.yaw);
  const auto hist = static_cast<std::size_t>(cfg.history_steps);
  const auto k_obj = static_cast<std::size_t>(cfg.num_objects);
  obs.objects.reset({hist, k_obj, kObjectFeatures});
  obs.roadgraph.reset({static_cast<std::size_t>(cfg.roadgraph_top_k), kRoadgraphFeatures});
  obs.traffic_lights.reset({static_cast<std::size_t>(cfg.traffic_lights), kTrafficLightFeatures});
  obs.path_target.reset({static_cast<std::size_t>(cfg.path_points), 2});

  // Objects: k nearest at the current step, the agent itself included.
  std::vector<detail::Ranked> near;
  const int n = static_cast<int>(state.num_objects());
  near.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const ObjectState& o = state.state(j, t);
    if (!o.valid) continue;
    near.push_back({detail::rank_distance(distance(o.position(), me.position())),
                    static_cast<std::size_t>(static_cast<std::uint32_t>(state.meta(j).id)),
                    static_cast<std::size_t>(j)});
  }
  std::sort(near.begin(), near.end());
  if (near.size() > k_obj) near.resize(k_obj);

  std::vector<Vec2> noise(near.size());
  std::vector<bool> dropped(near.size(), false);
  if (cfg.noise_std > 0.0 || cfg.dropout_prob > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);
    std::bernoulli_distribution drop(cfg.dropout_prob);
    for (std::size_t i = 0; i < near.size(); ++i) {
      if (static_cast<int>(near[i].index) == agent) continue;
      if (cfg.noise_std > 0.0) noise[i] = {gauss(rng), gauss(rng)};
      if (cfg.dropout_prob > 0.0) dropped[i] = drop(rng);
    }
  }

  for (std::size_t h = 0; h < hist; ++h) {
    const int step = t - static_cast<int>(hist - 1 - h);
    if (step < 0) continue;
    for (std::size_t i = 0; i < near.size(); ++i) {
      if (dropped[i]) continue;
      const int j = static_cast<int>(near[i].index);
      const ObjectState& o = state.state(j, step);
      if (!o.valid) continue;
      double* f = obs.objects.row(h * k_obj + i);
      const Vec2 p = frame.to_local(o.position() + noise[i]);
      const Vec2 v = frame.to_local_direction(o.velocity());
      const double yaw = o.yaw - me.yaw;
      f[0] = p.x;
      f[1] = p.y;
      f[2] = v.x;
      f[3] = v.y;
      f[4] = std::cos(yaw);
      f[5] = std::sin(yaw);
      f[6] = state.meta(j).length;
      f[7] = state.meta(j).width;
      f[8] = 1.0;
    }
  }

  // Roadgraph: in-box points nearest-first.
  std::vector<ResampledRoadPoint> owned;
  const std::vector<ResampledRoadPoint>* points = &scene.resampled_roadgraph();
  if (cfg.roadgraph_interval != scene.resample_interval()) {
    owned = scene.resample_roadgraph(cfg.roadgraph_interval);
    points = &owned;
  }
  // Packed (distance, index) keys sort much faster than Ranked records.
  if (points->size() >= (std::size_t{1} << detail::kIndexBits)) {
    throw Error("roadgraph too large for observation ranking");
  }
  std::vector<std::uint64_t> in_box;
  in_box.reserve(std::min<std::size_t>(points->size(), 1024));
  auto consider = [&](std::size_t i) {
    const Vec2 local = frame.to_local((*points)[i].position);
    if (detail::inside_view(local, cfg)) {
      const auto d = static_cast<std::uint64_t>(detail::rank_distance(norm(local)));
      in_box.push_back((d << detail::kIndexBits) | i);
    }
  };
  if (points == &owned) {
    for (std::size_t i = 0; i < owned.size(); ++i) consider(i);
  } else {
    const Vec2 center = frame.to_world({0.5 * (cfg.box_front - cfg.box_back), 0.0});
    const double radius = std::hypot(0.5 * (cfg.box_front + cfg.box_back), cfg.box_side);
    // Points occupy a single grid cell, so each index is visited once.
    scene.for_each_road_point_near(center, radius, consider);
  }
  const auto top_k = static_cast<std::size_t>(cfg.roadgraph_top_k);
  if (in_box.size() > top_k) {
    std::nth_element(in_box.begin(), in_box.begin() + static_cast<std::ptrdiff_t>(top_k),
                     in_box.end());
    in_box.resize(top_k);
  }
  std::sort(in_box.begin(), in_box.end());
  constexpr std::uint64_t kIndexMask = (std::uint64_t{1} << detail::kIndexBits) - 1;
  for (std::size_t r = 0; r < in_box.size(); ++r) {
    const ResampledRoadPoint& p = (*points)[in_box[r] & kIndexMask];
    double* f = obs.roadgraph.row(r);
    const Vec2 local = frame.to_local(p.position);
    const Vec2 dir = frame.to_local_direction(p.direction);
    f[0] = local.x;
    f[1] = local.y;
    f[2] = dir.x;
    f[3] = dir.y;
    f[4 + static_cast<std::size_t>(p.type)] = 1.0;
    f[4 + kNumRoadgraphTypes] = p.speed_limit;
    f[5 + kNumRoadgraphTypes] = 1.0;
  }

  // Traffic lights: nearest stop points.
  const auto& lights = state.scenario().traffic_lights;
  std::vector<detail::Ranked> tl;
  for (std::size_t i = 0; i < lights.size(); ++i) {
    const double d = distance(lights[i].stop_point(), me.position());
    tl.push_back({detail::rank_distance(d), i, i});
  }
  std::sort(tl.begin(), tl.end());
  if (tl.size() > static_cast<std::size_t>(cfg.traffic_lights)) {
    tl.resize(static_cast<std::size_t>(cfg.traffic_lights));
  }
  for (std::size_t r = 0; r < tl.size(); ++r) {
    const TrafficLightTrack& light = lights[tl[r].index];
    double* f = obs.traffic_lights.row(r);
    const Vec2 local = frame.to_local(light.stop_point());
    f[0] = local.x;
    f[1] = local.y;
    const LightState ls = light.states.empty()
                              ? LightState::kUnknown
                              : light.states[std::min(static_cast<std::size_t>(t),
                                                      light.states.size() - 1)];
    f[2 + static_cast<std::size_t>(ls)] = 1.0;
    f[2 + kNumLightStates] = 1.0;
  }

  // Path target: on-route path ahead of the agent's projection.
  const double s0 = route->line.project(me.position()).s;
  for (int i = 0; i < cfg.path_points; ++i) {
    const Vec2 p = frame.to_local(route->line.point_at(s0 + (i + 1) * cfg.path_spacing));
    double* f = obs.path_target.row(static_cast<std::size_t>(i));
    f[0] = p.x;
    f[1] = p.y;
  }
}

inline Observation extract_observation(const SimulatorState& state, const SceneContext& scene,
                                       int agent, const ObservationConfig& cfg,
                                       std::uint64_t seed = 0) {
  Observation obs;
  extract_observation_into(obs, state, scene, agent, cfg, seed);
  return obs;
}

}  // namespace midsim
