#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"
#include "midsim/sdc_paths.hpp"

namespace midsim {

inline constexpr double kLaneHalfWidth = 1.75;  // m, lane corridor half-width

// A traffic light that governs a route, located by arclength along it.
struct RouteLight {
  std::size_t light = 0;
  double s = 0.0;
};

struct AgentRoute {
  Polyline line;                   // on-route path
  std::vector<Polyline> all_paths;  // every candidate path, on-route included
  std::vector<RouteLight> lights;
};

struct ResampledRoadPoint {
  Vec2 position{};
  Vec2 direction{};
  RoadgraphType type = RoadgraphType::kOther;
  double speed_limit = 0.0;
};

struct NearestLane {
  std::int32_t lane_id = 0;
  Vec2 direction{1.0, 0.0};
  double distance = kInf;
  double speed_limit = 0.0;
};

// Immutable per-scenario geometry shared by metrics, observation, planners
// and the environment. Built once, safe to share across threads.
class SceneContext {
 public:
  static std::shared_ptr<const SceneContext> build(
      std::shared_ptr<const Scenario> scenario, std::span<const int> agent_indices = {}) {
    return std::shared_ptr<const SceneContext>(
        new SceneContext(std::move(scenario), agent_indices));
  }

  const Scenario& scenario() const { return *scenario_; }
  const std::shared_ptr<const Scenario>& scenario_ptr() const { return scenario_; }
  const LaneGraph& lane_graph() const { return graph_; }
  bool has_road_edges() const { return !edges_.empty(); }

  // Route of the ego (index = sdc) or of a reactive agent; nullptr if none.
  const AgentRoute* route_for(int object_index) const {
    auto it = routes_.find(object_index);
    return it == routes_.end() ? nullptr : &it->second;
  }

  // Positive on the drivable (left) side of the nearest road edge.
  double signed_edge_distance(Vec2 p) const {
    const auto [id, d] = edge_grid_.nearest(p, [&](std::size_t i) {
      return closest_on_segment(p, edges_[i].a, edges_[i].b).distance;
    });
    if (id == static_cast<std::size_t>(-1)) return kInf;
    const EdgeSegment& e = edges_[id];
    const SegmentClosest c = closest_on_segment(p, e.a, e.b);
    double side;
    if (c.t <= 0.0) {
      side = dot(e.normal_a, p - e.a);
    } else if (c.t >= 1.0) {
      side = dot(e.normal_b, p - e.b);
    } else {
      side = cross(e.b - e.a, p - e.a);
    }
    return side >= 0.0 ? d : -d;
  }

  bool box_offroad(const OrientedBox& box) const {
    if (edges_.empty()) return false;
    for (const Vec2& c : box.corners()) {
      if (signed_edge_distance(c) < 0.0) return true;
    }
    return false;
  }

  NearestLane nearest_lane(Vec2 p) const {
    NearestLane out;
    const auto [id, d] = lane_grid_.nearest(p, [&](std::size_t i) {
      return closest_on_segment(p, lane_segments_[i].a, lane_segments_[i].b).distance;
    });
    if (id == static_cast<std::size_t>(-1)) return out;
    const LaneSegment& seg = lane_segments_[id];
    out.lane_id = seg.lane_id;
    out.direction = normalized(seg.b - seg.a);
    out.distance = d;
    auto it = graph_.speed_limits.find(seg.lane_id);
    out.speed_limit = it == graph_.speed_limits.end() ? 0.0 : it->second;
    return out;
  }

  // Speed limit of the nearest lane; 0 when unknown or no lane is close.
  double speed_limit_at(Vec2 p) const {
    const NearestLane lane = nearest_lane(p);
    return lane.distance <= 2.0 * kLaneHalfWidth ? lane.speed_limit : 0.0;
  }

  // Lanes whose corridor (centerline +/- half width) overlaps the footprint,
  // ascending by id.
  std::vector<std::int32_t> lanes_overlapping(const OrientedBox& box,
                                              double half_width = kLaneHalfWidth) const {
    std::vector<std::int32_t> out;
    const Vec2 c = box.center;
    const double reach = box.circumradius() + half_width;
    const Vec2 h = heading_vector(box.yaw);
    auto seen = [&](std::int32_t id) { return std::find(out.begin(), out.end(), id) != out.end(); };
    lane_grid_.for_each_near(c, reach, [&](std::size_t i) {
      const LaneSegment& seg = lane_segments_[i];
      if (std::min(seg.a.x, seg.b.x) >= c.x + reach || std::max(seg.a.x, seg.b.x) <= c.x - reach ||
          std::min(seg.a.y, seg.b.y) >= c.y + reach || std::max(seg.a.y, seg.b.y) <= c.y - reach) {
        return;
      }
      if (seen(seg.lane_id)) return;
      // The box lies within its circumradius of the center.
      const double dc = closest_on_segment(c, seg.a, seg.b).distance;
      if (dc - box.circumradius() >= half_width) return;
      if (dc >= half_width) {
        // Separation along the segment normal bounds the distance from below.
        const Vec2 ab = seg.b - seg.a;
        const double len = norm(ab);
        if (len > 0.0) {
          const Vec2 n{-ab.y / len, ab.x / len};
          const double support = 0.5 * box.length * std::abs(dot(h, n)) +
                                 0.5 * box.width * std::abs(cross(h, n));
          if (std::abs(dot(c - seg.a, n)) - support >= half_width) return;
        }
      }
      if (dc < half_width || box_segment_distance(box, seg.a, seg.b) < half_width) {
        out.push_back(seg.lane_id);
      }
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  // Successor, predecessor, fork siblings and merge siblings count as one lane.
  bool lanes_connected(std::int32_t a, std::int32_t b) const {
    if (a == b) return true;
    const auto& sa = graph_.successors(a);
    const auto& sb = graph_.successors(b);
    if (sa.contains(b) || sb.contains(a)) return true;
    for (std::int32_t s : sa) {
      if (sb.contains(s)) return true;
    }
    auto pa = predecessors_.find(a);
    auto pb = predecessors_.find(b);
    if (pa != predecessors_.end() && pb != predecessors_.end()) {
      for (std::int32_t p : pa->second) {
        if (pb->second.contains(p)) return true;
      }
    }
    return false;
  }

  bool occupies_multiple_lanes(const OrientedBox& box) const {
    const std::vector<std::int32_t> lanes = lanes_overlapping(box);
    for (auto i = lanes.begin(); i != lanes.end(); ++i) {
      for (auto j = std::next(i); j != lanes.end(); ++j) {
        if (!lanes_connected(*i, *j)) return true;
      }
    }
    return false;
  }

  const std::vector<ResampledRoadPoint>& resampled_roadgraph() const { return resampled_; }
  double resample_interval() const { return resample_interval_; }

  // Visits indices into resampled_roadgraph() whose grid cell lies within
  // `radius` of p.
  template <typename Visit>
  void for_each_road_point_near(Vec2 p, double radius, Visit&& visit) const {
    point_grid_.for_each_near(p, radius, visit);
  }

  std::vector<ResampledRoadPoint> resample_roadgraph(double interval) const {
    std::vector<ResampledRoadPoint> out;
    std::map<std::pair<std::uint8_t, std::int32_t>, std::vector<const RoadgraphPoint*>> groups;
    for (const RoadgraphPoint& p : scenario_->roadgraph) {
      groups[{static_cast<std::uint8_t>(p.type), p.lane_id}].push_back(&p);
    }
    for (const auto& [key, pts] : groups) {
      std::vector<Vec2> xy;
      xy.reserve(pts.size());
      for (const RoadgraphPoint* p : pts) xy.push_back(p->position());
      const Polyline line(std::move(xy));
      const auto type = static_cast<RoadgraphType>(key.first);
      if (line.size() < 2 || line.length() <= 0.0) {
        for (const RoadgraphPoint* p : pts) {
          out.push_back({p->position(), p->direction(), type, p->speed_limit});
        }
        continue;
      }
      const double limit = pts.front()->speed_limit;
      const auto samples = line.resample(interval);
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const double s = std::min(static_cast<double>(k) * interval, line.length());
        out.push_back({samples[k], line.direction_at(s), type, limit});
      }
    }
    return out;
  }

  // Lights governing a route: stop point laterally within the lane corridor and
  // the light's lane heading agreeing with the route heading.
  std::vector<RouteLight> lights_on(const Polyline& route) const {
    std::vector<RouteLight> out;
    if (route.size() < 2) return out;
    const auto lanes = group_polylines(scenario_->roadgraph, RoadgraphType::kLaneCenter);
    for (std::size_t i = 0; i < scenario_->traffic_lights.size(); ++i) {
      const TrafficLightTrack& tl = scenario_->traffic_lights[i];
      const auto proj = route.project(tl.stop_point());
      if (proj.distance > kLaneHalfWidth) continue;
      Vec2 light_dir = route.direction_at(proj.s);
      if (auto it = lanes.find(tl.lane_id); it != lanes.end() && it->second.size() >= 2) {
        const Polyline lane(it->second);
        light_dir = lane.direction_at(lane.project(tl.stop_point()).s);
      }
      if (dot(light_dir, route.direction_at(proj.s)) < std::cos(kPi / 4.0)) continue;
      out.push_back({i, proj.s});
    }
    return out;
  }

 private:
  struct EdgeSegment {
    Vec2 a{};
    Vec2 b{};
    Vec2 normal_a{};
    Vec2 normal_b{};
  };
  struct LaneSegment {
    std::int32_t lane_id = 0;
    Vec2 a{};
    Vec2 b{};
  };

  SceneContext(std::shared_ptr<const Scenario> scenario, std::span<const int> agent_indices)
      : scenario_(std::move(scenario)) {
    const Scenario& s = *scenario_;
    graph_ = build_lane_graph(s.roadgraph);
    for (const auto& [a, succ] : graph_.exits) {
      for (std::int32_t b : succ) predecessors_[b].insert(a);
    }
    for (const auto& [id, lane] : graph_.lanes) {
      const auto& pts = lane.points();
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        lane_grid_.insert(lane_segments_.size(), pts[i], pts[i + 1]);
        lane_segments_.push_back({id, pts[i], pts[i + 1]});
      }
    }
    for (auto& [id, pts] : group_polylines(s.roadgraph, RoadgraphType::kRoadEdge)) {
      (void)id;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 dir = normalized(pts[i + 1] - pts[i]);
        if (norm(dir) == 0.0) continue;
        const Vec2 prev_dir = i > 0 ? normalized(pts[i] - pts[i - 1]) : dir;
        const Vec2 next_dir = i + 2 < pts.size() ? normalized(pts[i + 2] - pts[i + 1]) : dir;
        EdgeSegment e{pts[i], pts[i + 1], normalized(left_normal(prev_dir) + left_normal(dir)),
                      normalized(left_normal(dir) + left_normal(next_dir))};
        edge_grid_.insert(edges_.size(), e.a, e.b);
        edges_.push_back(e);
      }
    }
    resampled_ = resample_roadgraph(resample_interval_);
    for (std::size_t i = 0; i < resampled_.size(); ++i) {
      point_grid_.insert(i, resampled_[i].position, resampled_[i].position);
    }
    lane_grid_.freeze();
    edge_grid_.freeze();
    point_grid_.freeze();

    if (const int sdc = s.sdc_index(); sdc >= 0 && s.on_route_path() != nullptr) {
      AgentRoute r;
      r.line = s.on_route_path()->polyline();
      for (const SdcPath& p : s.sdc_paths) r.all_paths.push_back(p.polyline());
      r.lights = lights_on(r.line);
      routes_.emplace(sdc, std::move(r));
    }
    for (int idx : agent_indices) {
      if (routes_.contains(idx) || graph_.empty()) continue;
      try {
        auto paths = reconstruct_paths_for(graph_, s.objects.at(static_cast<std::size_t>(idx)));
        if (paths.empty()) continue;
        AgentRoute r;
        r.line = paths.front().polyline();
        for (const SdcPath& p : paths) r.all_paths.push_back(p.polyline());
        r.lights = lights_on(r.line);
        routes_.emplace(idx, std::move(r));
      } catch (const Error&) {
        // No anchoring lane: the agent keeps replaying its log.
      }
    }
  }

  std::shared_ptr<const Scenario> scenario_;
  LaneGraph graph_;
  std::map<std::int32_t, std::set<std::int32_t>> predecessors_;
  std::vector<LaneSegment> lane_segments_;
  SegmentGrid lane_grid_{8.0};
  std::vector<EdgeSegment> edges_;
  SegmentGrid edge_grid_{8.0};
  double resample_interval_ = 2.0;
  std::vector<ResampledRoadPoint> resampled_;
  SegmentGrid point_grid_{8.0};
  std::map<int, AgentRoute> routes_;
};

}  // namespace midsim
