#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "midsim/metrics.hpp"
#include "midsim/planners.hpp"
#include "midsim/scenario.hpp"
#include "midsim/scene_context.hpp"
#include "midsim/sdc_paths.hpp"
#include "midsim/synthetic.hpp"

namespace fixtures {

using namespace midsim;

inline std::vector<Vec2> line_points(Vec2 a, Vec2 b, double spacing = 1.0) {
  std::vector<Vec2> pts;
  const double len = distance(a, b);
  const int n = static_cast<int>(std::ceil(len / spacing));
  for (int i = 0; i <= n; ++i) pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
  return pts;
}

// Hand-built scenes for metric and planner oracles.
class SceneBuilder {
 public:
  SceneBuilder& polyline(RoadgraphType type, std::int32_t id, const std::vector<Vec2>& pts,
                         double limit = 0.0) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2 d = normalized(i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1]);
      s_.roadgraph.push_back({pts[i].x, pts[i].y, d.x, d.y, type, id, limit});
    }
    return *this;
  }
  SceneBuilder& lane(std::int32_t id, Vec2 a, Vec2 b, double limit = 13.4) {
    return polyline(RoadgraphType::kLaneCenter, id, line_points(a, b), limit);
  }
  SceneBuilder& edge(std::int32_t id, Vec2 a, Vec2 b) {
    return polyline(RoadgraphType::kRoadEdge, id, line_points(a, b));
  }
  SceneBuilder& object(std::int32_t id, std::function<ObjectState(int)> states, bool sdc = false,
                       double length = 4.5, double width = 2.0) {
    SceneObject o;
    o.meta = {id, ObjectClass::kVehicle, length, width, sdc, sdc};
    for (int t = 0; t < kHorizon; ++t) o.states.push_back(states(t));
    s_.objects.push_back(std::move(o));
    return *this;
  }
  SceneBuilder& light(std::int32_t lane_id, Vec2 stop, std::function<LightState(int)> state) {
    TrafficLightTrack tl{lane_id, stop.x, stop.y, {}};
    for (int t = 0; t < kHorizon; ++t) tl.states.push_back(state(t));
    s_.traffic_lights.push_back(std::move(tl));
    return *this;
  }
  std::shared_ptr<const Scenario> build(std::string id = "fixture") {
    s_.id = std::move(id);
    const int sdc = s_.sdc_index();
    if (sdc >= 0 && s_.sdc_paths.empty()) {
      s_.sdc_paths = reconstruct_paths_for(build_lane_graph(s_.roadgraph), s_.objects[sdc]);
    }
    return std::make_shared<const Scenario>(s_);
  }

 private:
  Scenario s_;
};

// A car at constant velocity along +x through (x0, y) at t = 0.
inline std::function<ObjectState(int)> cruise(double x0, double y, double v, double yaw = 0.0) {
  return [=](int t) {
    const Vec2 h = heading_vector(yaw);
    return ObjectState{x0 + h.x * v * t * kDt, y + h.y * v * t * kDt, yaw, h.x * v, h.y * v, true};
  };
}

inline std::function<ObjectState(int)> parked(double x, double y, double yaw = 0.0) {
  return [=](int) { return ObjectState{x, y, yaw, 0.0, 0.0, true}; };
}

// Straight two-way road: ego lane y = 0 eastbound, oncoming lane y = 3.5,
// edges at y = -1.75 and y = 5.25.
inline SceneBuilder two_way_road(double length = 300.0, double limit = 13.4) {
  SceneBuilder b;
  b.lane(1, {0, 0}, {length, 0}, limit)
      .lane(2, {length, 3.5}, {0, 3.5}, limit)
      .edge(100, {0, -1.75}, {length, -1.75})
      .edge(101, {length, 5.25}, {0, 5.25});
  return b;
}

// Log replay rollout whose ego trajectory is replaced from start_step on.
inline Rollout with_ego(std::shared_ptr<const Scenario> sc,
                        const std::function<ObjectState(int)>& ego, int last = kHorizon - 1) {
  Rollout r;
  r.scenario = sc;
  r.ego_index = sc->sdc_index();
  for (const SceneObject& o : sc->objects) r.trajectories.push_back(o.states);
  for (int t = kInitSteps; t < kHorizon; ++t) {
    r.trajectories[static_cast<std::size_t>(r.ego_index)][static_cast<std::size_t>(t)] = ego(t);
  }
  r.termination_step = last;
  return r;
}

inline Rollout replay(std::shared_ptr<const Scenario> sc) {
  const auto& log = sc->objects[static_cast<std::size_t>(sc->sdc_index())].states;
  return with_ego(sc, [&](int t) { return log[static_cast<std::size_t>(t)]; });
}

// The whole scenario moved rigidly by `f` (local coordinates to world).
inline Scenario transformed(Scenario s, const Frame& f) {
  for (SceneObject& o : s.objects) {
    for (ObjectState& st : o.states) {
      const Vec2 p = f.to_world(st.position());
      const Vec2 v = f.to_world_direction(st.velocity());
      st = {p.x, p.y, st.yaw + f.yaw(), v.x, v.y, st.valid};
    }
  }
  for (RoadgraphPoint& r : s.roadgraph) {
    const Vec2 p = f.to_world(r.position());
    const Vec2 d = f.to_world_direction(r.direction());
    r.x = p.x;
    r.y = p.y;
    r.dir_x = d.x;
    r.dir_y = d.y;
  }
  for (TrafficLightTrack& tl : s.traffic_lights) {
    const Vec2 p = f.to_world(tl.stop_point());
    tl.stop_x = p.x;
    tl.stop_y = p.y;
  }
  for (SdcPath& path : s.sdc_paths) {
    for (Vec2& w : path.waypoints) w = f.to_world(w);
  }
  return s;
}

inline MetricValues metrics_of(const Rollout& r) {
  const auto scene = SceneContext::build(r.scenario);
  return compute_metrics(r, *scene);
}

// One collision per responsibility branch, in rule order.
struct FaultCase {
  std::string name;
  Rollout rollout;
  bool at_fault = false;
};

inline std::vector<FaultCase> at_fault_deck() {
  std::vector<FaultCase> deck;
  auto add = [&](std::string name, SceneBuilder b, bool expected) {
    deck.push_back({name, replay(b.build(name)), expected});
  };
  {
    SceneBuilder b = two_way_road();
    b.object(0, cruise(10, 0, 10), true).object(1, parked(70, 0));
    add("drives into parked car", b, true);
  }
  {
    SceneBuilder b = two_way_road();
    b.object(0, parked(60, 0), true).object(1, cruise(0, 0, 10));
    add("rear-ended while stopped", b, false);
  }
  {
    // Straddling both lanes, struck from behind.
    SceneBuilder b = two_way_road();
    b.object(0, cruise(60, 1.75, 5), true).object(1, cruise(30, 1.75, 10));
    add("struck on multiple lanes", b, true);
  }
  {
    SceneBuilder b = two_way_road();
    b.object(0, cruise(10, 0, 10), true).object(1, cruise(60, 0, 3));
    add("front contact with slower lead", b, true);
  }
  {
    SceneBuilder b = two_way_road();
    b.object(0, cruise(60, 0, 5), true).object(1, cruise(30, 0, 10));
    add("rear-bumper collision", b, false);
  }
  {
    // Partner drifts right into the ego's rear quarter from the side.
    SceneBuilder b = two_way_road();
    b.object(0, cruise(60, 0, 5), true).object(1, [](int t) {
      return ObjectState{57.0 + 0.5 * t, 4.0 - 0.1 * t, 0.0, 5.0, -1.0, true};
    });
    add("side contact on rear half", b, false);
  }
  return deck;
}

// Ego at constant speed on a straight 10 m/s road: under, half a threshold
// over, and a full threshold over the limit.
inline std::shared_ptr<const Scenario> constant_speed_scene(double speed) {
  SceneBuilder b = two_way_road(300.0, 10.0);
  b.object(0, cruise(10, 0, speed), true);
  return b.build("speed");
}

// Ego heading east along the westbound lane for `dist` meters.
inline Rollout wrong_way_rollout(double dist) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true);
  const auto sc = b.build("wrong-way");
  const double v = dist / ((kHorizon - 1 - kInitSteps) * kDt);
  return with_ego(sc, [=](int t) {
    return ObjectState{100.0 + v * (t - kInitSteps) * kDt, 3.5, 0.0, v, 0.0, true};
  });
}

// Ego straddling the lane divider for `steps` steps, centered otherwise.
inline Rollout straddle_rollout(int steps) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true);
  const auto sc = b.build("straddle");
  return with_ego(sc, [=](int t) {
    ObjectState s = cruise(10, 0, 10)(t);
    if (t >= 20 && t < 20 + steps) s.y = 1.75;
    return s;
  });
}

// A parked car overhanging the ego lane by 0.2 m, beyond the end of the
// expert log; a free same-direction lane lies to the left.
inline std::shared_ptr<const Scenario> blocked_lane_scene() {
  SyntheticSpec spec;
  spec.layout = SyntheticLayout::kCutIn;
  spec.cut_in = false;
  spec.ego_speed = 8.0;
  spec.ego_start = 10.0;
  spec.parked = ParkedSpec{92.0, -1.8};
  auto s = generate_synthetic(spec, 0);
  s.id = "blocked-lane";
  return std::make_shared<const Scenario>(std::move(s));
}

// Ego at 10 m/s behind a 5 m/s lead whose bumper gap gives `ttc` seconds at
// the reset step. Returns the PDM decision at that step.
inline PdmDecision pdm_ttc_probe(double ttc, const PdmConfig& cfg = {}) {
  const double ego_x = 10.0 + 1.0 * kInitSteps;
  const double lead_x = ego_x + 4.5 + 5.0 * ttc - 0.5 * kInitSteps;
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true).object(1, cruise(lead_x, 0, 5));
  const auto sc = b.build("ttc-probe");
  const auto scene = SceneContext::build(sc);
  const int ego = 0;
  const SimulatorState state(sc, kInitSteps, std::span<const int>(&ego, 1));
  return pdm_decide(state, *scene, ego, cfg);
}

// Straight road with a log follower that tailgates an ego logged above the
// speed limit; any planner holding the limit gets rear-ended under log replay.
inline std::vector<std::shared_ptr<const Scenario>> reactive_suite(int n) {
  std::vector<std::shared_ptr<const Scenario>> out;
  for (int i = 0; i < n; ++i) {
    SyntheticSpec spec;
    spec.speed_limit = 8.0;
    spec.ego_speed = 10.0 + 0.05 * (i % 5);
    spec.ego_start = 30.0;
    spec.follower = VehicleSpec{6.0 + 0.5 * (i % 7), spec.ego_speed};
    spec.oncoming = i % 3 == 0 ? -1 : 0;
    auto s = generate_synthetic(spec, static_cast<std::uint64_t>(i));
    s.id = "reactive-" + std::to_string(i);
    out.push_back(std::make_shared<const Scenario>(std::move(s)));
  }
  return out;
}

}  // namespace fixtures
