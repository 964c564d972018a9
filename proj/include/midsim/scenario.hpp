#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "midsim/geometry.hpp"

namespace midsim {

// Scenario horizon: 1 s of history plus 8 s of future at 10 Hz.
inline constexpr int kHorizon = 91;
inline constexpr double kDt = 0.1;
inline constexpr int kInitSteps = 10;
inline constexpr std::size_t kMaxObjects = 64;
inline constexpr std::size_t kMaxSdcPaths = 10;
inline constexpr double kMaxPathSpacing = 2.5;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ObjectClass : std::uint8_t { kVehicle = 0, kPedestrian, kCyclist, kOther };

enum class RoadgraphType : std::uint8_t {
  kLaneCenter = 0,
  kRoadLine,
  kRoadEdge,
  kStopSign,
  kCrosswalk,
  kSpeedBump,
  kOther,
};
inline constexpr std::size_t kNumRoadgraphTypes = 7;

enum class LightState : std::uint8_t { kUnknown = 0, kRed, kYellow, kGreen };
inline constexpr std::size_t kNumLightStates = 4;

struct ObjectState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  bool valid = false;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  double speed() const { return std::sqrt(vx * vx + vy * vy); }
  bool operator==(const ObjectState&) const = default;
};

struct ObjectMetadata {
  std::int32_t id = 0;
  ObjectClass object_class = ObjectClass::kVehicle;
  double length = 4.5;
  double width = 2.0;
  bool is_sdc = false;
  bool is_controllable = false;
  bool operator==(const ObjectMetadata&) const = default;
};

struct RoadgraphPoint {
  double x = 0.0;
  double y = 0.0;
  double dir_x = 0.0;
  double dir_y = 0.0;
  RoadgraphType type = RoadgraphType::kLaneCenter;
  std::int32_t lane_id = 0;
  double speed_limit = 0.0;  // 0 = unknown

  Vec2 position() const { return {x, y}; }
  Vec2 direction() const { return {dir_x, dir_y}; }
  bool operator==(const RoadgraphPoint&) const = default;
};

struct TrafficLightTrack {
  std::int32_t lane_id = 0;
  double stop_x = 0.0;
  double stop_y = 0.0;
  std::vector<LightState> states;

  Vec2 stop_point() const { return {stop_x, stop_y}; }
  bool operator==(const TrafficLightTrack&) const = default;
};

struct SdcPath {
  std::vector<Vec2> waypoints;
  std::vector<double> arclength;
  bool on_route = false;
  std::int32_t valid_count = 0;

  Polyline polyline() const { return Polyline(waypoints); }
  bool operator==(const SdcPath&) const = default;
};

inline SdcPath make_sdc_path(std::vector<Vec2> waypoints, bool on_route) {
  SdcPath path;
  const Polyline line(waypoints);
  path.arclength = line.arclength();
  path.valid_count = static_cast<std::int32_t>(waypoints.size());
  path.waypoints = std::move(waypoints);
  path.on_route = on_route;
  return path;
}

struct SceneObject {
  ObjectMetadata meta;
  std::vector<ObjectState> states;

  OrientedBox box_at(int t) const {
    const ObjectState& s = states[static_cast<std::size_t>(t)];
    return {s.position(), s.yaw, meta.length, meta.width};
  }
  bool operator==(const SceneObject&) const = default;
};

struct Scenario {
  std::string id;
  std::int32_t horizon = kHorizon;
  double dt = kDt;
  std::vector<SceneObject> objects;
  std::vector<RoadgraphPoint> roadgraph;
  std::vector<TrafficLightTrack> traffic_lights;
  std::vector<SdcPath> sdc_paths;

  int sdc_index() const {
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].meta.is_sdc) return static_cast<int>(i);
    }
    return -1;
  }

  int index_of(std::int32_t object_id) const {
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].meta.id == object_id) return static_cast<int>(i);
    }
    return -1;
  }

  // First on-route path; validated scenarios always have one.
  const SdcPath* on_route_path() const {
    for (const SdcPath& p : sdc_paths) {
      if (p.on_route) return &p;
    }
    return nullptr;
  }

  bool operator==(const Scenario&) const = default;
};

inline std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kVehicle: return "vehicle";
    case ObjectClass::kPedestrian: return "pedestrian";
    case ObjectClass::kCyclist: return "cyclist";
    case ObjectClass::kOther: return "other";
  }
  return "other";
}

inline std::string_view to_string(RoadgraphType t) {
  switch (t) {
    case RoadgraphType::kLaneCenter: return "lane_center";
    case RoadgraphType::kRoadLine: return "road_line";
    case RoadgraphType::kRoadEdge: return "road_edge";
    case RoadgraphType::kStopSign: return "stop_sign";
    case RoadgraphType::kCrosswalk: return "crosswalk";
    case RoadgraphType::kSpeedBump: return "speed_bump";
    case RoadgraphType::kOther: return "other";
  }
  return "other";
}

inline std::string_view to_string(LightState s) {
  switch (s) {
    case LightState::kUnknown: return "unknown";
    case LightState::kRed: return "red";
    case LightState::kYellow: return "yellow";
    case LightState::kGreen: return "green";
  }
  return "unknown";
}

inline std::optional<ObjectClass> object_class_from_string(std::string_view s) {
  for (auto c : {ObjectClass::kVehicle, ObjectClass::kPedestrian,
                 ObjectClass::kCyclist, ObjectClass::kOther}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

inline std::optional<RoadgraphType> roadgraph_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNumRoadgraphTypes; ++i) {
    const auto t = static_cast<RoadgraphType>(i);
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline std::optional<LightState> light_state_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNumLightStates; ++i) {
    const auto t = static_cast<LightState>(i);
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

// Returns every violated invariant; empty means the scenario is valid.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };

  if (s.horizon != kHorizon) {
    fail("horizon " + std::to_string(s.horizon) + " != " + std::to_string(kHorizon));
  }
  if (!(std::abs(s.dt - kDt) < 1e-9)) fail("dt must be 0.1 s");
  if (s.objects.size() > kMaxObjects) {
    fail("object count " + std::to_string(s.objects.size()) + " exceeds 64");
  }
  if (s.objects.empty()) fail("scenario has no objects");

  int sdc_count = 0;
  std::set<std::int32_t> ids;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const SceneObject& o = s.objects[i];
    const std::string where = "object " + std::to_string(o.meta.id);
    if (!ids.insert(o.meta.id).second) fail(where + ": duplicate id");
    if (o.meta.is_sdc) ++sdc_count;
    if (!(o.meta.length > 0.0) || !(o.meta.width > 0.0)) {
      fail(where + ": non-positive size");
    }
    if (o.meta.length < o.meta.width) fail(where + ": length < width");
    if (static_cast<std::int64_t>(o.states.size()) != s.horizon) {
      fail(where + ": trajectory length != horizon");
      continue;
    }
    for (const ObjectState& st : o.states) {
      if (!st.valid) continue;
      if (!std::isfinite(st.x) || !std::isfinite(st.y) || !std::isfinite(st.vx) ||
          !std::isfinite(st.vy) || !(std::abs(st.yaw) <= kPi)) {
        fail(where + ": non-finite state or yaw outside [-pi, pi]");
        break;
      }
    }
  }
  if (sdc_count != 1) fail("expected exactly one sdc, found " + std::to_string(sdc_count));
  if (const int sdc = s.sdc_index(); sdc >= 0 &&
      static_cast<std::int64_t>(s.objects[static_cast<std::size_t>(sdc)].states.size()) ==
          s.horizon &&
      !s.objects[static_cast<std::size_t>(sdc)].states[kInitSteps].valid) {
    fail("sdc invalid at the initial step");
  }

  for (const RoadgraphPoint& p : s.roadgraph) {
    const double n = std::hypot(p.dir_x, p.dir_y);
    if (!std::isfinite(p.x) || !std::isfinite(p.y) ||
        !(n == 0.0 || std::abs(n - 1.0) <= 1e-6)) {
      fail("roadgraph point with non-unit direction");
      break;
    }
  }
  for (const TrafficLightTrack& tl : s.traffic_lights) {
    if (static_cast<std::int64_t>(tl.states.size()) != s.horizon) {
      fail("traffic light " + std::to_string(tl.lane_id) + ": state length != horizon");
    }
  }

  if (s.sdc_paths.size() > kMaxSdcPaths) fail("more than 10 sdc paths");
  bool any_on_route = false;
  for (const SdcPath& p : s.sdc_paths) {
    any_on_route = any_on_route || p.on_route;
    if (p.waypoints.size() != p.arclength.size() || p.waypoints.empty()) {
      fail("sdc path with mismatched or empty arrays");
      continue;
    }
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
      if (p.arclength[i] < p.arclength[i - 1]) {
        fail("sdc path arclength decreases");
        break;
      }
      if (distance(p.waypoints[i], p.waypoints[i - 1]) > kMaxPathSpacing + 1e-9) {
        fail("sdc path spacing exceeds 2.5 m");
        break;
      }
    }
  }
  if (!any_on_route) fail("no on-route sdc path");
  return problems;
}

}  // namespace midsim
