#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"

namespace midsim {

struct LaneGraph {
  std::map<std::int32_t, Polyline> lanes;
  std::map<std::int32_t, std::set<std::int32_t>> exits;
  std::map<std::int32_t, double> speed_limits;

  bool empty() const { return lanes.empty(); }
  const std::set<std::int32_t>& successors(std::int32_t lane) const {
    static const std::set<std::int32_t> kNone;
    auto it = exits.find(lane);
    return it == exits.end() ? kNone : it->second;
  }
};

struct LaneGraphOptions {
  double max_endpoint_gap = 1.0;             // m
  double max_heading_gap = 30.0 * kPi / 180;  // rad
};

// Groups the polyline points of one roadgraph type by lane_id, in point order.
inline std::map<std::int32_t, std::vector<Vec2>> group_polylines(
    std::span<const RoadgraphPoint> roadgraph, RoadgraphType type) {
  std::map<std::int32_t, std::vector<Vec2>> out;
  for (const RoadgraphPoint& p : roadgraph) {
    if (p.type == type) out[p.lane_id].push_back(p.position());
  }
  return out;
}

inline LaneGraph build_lane_graph(std::span<const RoadgraphPoint> roadgraph,
                                  const LaneGraphOptions& opt = {}) {
  LaneGraph g;
  for (const RoadgraphPoint& p : roadgraph) {
    if (p.type == RoadgraphType::kLaneCenter && !g.speed_limits.contains(p.lane_id)) {
      g.speed_limits[p.lane_id] = p.speed_limit;
    }
  }
  for (auto& [id, pts] : group_polylines(roadgraph, RoadgraphType::kLaneCenter)) {
    if (pts.size() >= 2) g.lanes.emplace(id, Polyline(std::move(pts)));
  }
  for (const auto& [a, la] : g.lanes) {
    const Vec2 end = la.points().back();
    const Vec2 end_dir = la.direction_at(la.length());
    for (const auto& [b, lb] : g.lanes) {
      if (a == b) continue;
      if (distance(end, lb.points().front()) >= opt.max_endpoint_gap) continue;
      const Vec2 start_dir = lb.direction_at(0.0);
      const double gap = std::abs(std::atan2(cross(end_dir, start_dir), dot(end_dir, start_dir)));
      if (gap < opt.max_heading_gap) g.exits[a].insert(b);
    }
  }
  return g;
}

struct PathOptions {
  std::size_t max_paths = 10;
  double max_length = 300.0;    // m
  double spacing = 2.0;         // m
  double anchor_radius = 10.0;  // m
  std::size_t max_leaves = 4096;
};

namespace detail {

struct PathCandidate {
  std::vector<std::int32_t> lanes;
  Polyline line;
  double endpoint_distance = kInf;
};

inline void expand_paths(const LaneGraph& g, std::vector<std::int32_t>& seq,
                         double length, const PathOptions& opt,
                         std::vector<std::vector<std::int32_t>>& leaves) {
  if (leaves.size() >= opt.max_leaves) return;
  bool extended = false;
  if (length < opt.max_length) {
    for (std::int32_t next : g.successors(seq.back())) {
      if (std::find(seq.begin(), seq.end(), next) != seq.end()) continue;
      auto it = g.lanes.find(next);
      if (it == g.lanes.end()) continue;
      extended = true;
      seq.push_back(next);
      expand_paths(g, seq, length + it->second.length(), opt, leaves);
      seq.pop_back();
    }
  }
  if (!extended) leaves.push_back(seq);
}

}  // namespace detail

// Depth-first route enumeration from the lane nearest to `start`, ranked by
// how close each path passes to `final`. The best path is marked on-route.
inline std::vector<SdcPath> reconstruct_paths(const LaneGraph& g, Vec2 start, Vec2 final,
                                              const PathOptions& opt = {}) {
  std::int32_t anchor = 0;
  Polyline::Projection anchor_proj;
  for (const auto& [id, lane] : g.lanes) {
    const auto proj = lane.project(start);
    if (proj.distance < anchor_proj.distance) {
      anchor = id;
      anchor_proj = proj;
    }
  }
  if (!(anchor_proj.distance <= opt.anchor_radius)) {
    throw Error("no anchoring lane within 10 m of the start position");
  }

  const Polyline& first = g.lanes.at(anchor);
  std::vector<std::int32_t> seq{anchor};
  std::vector<std::vector<std::int32_t>> leaves;
  detail::expand_paths(g, seq, first.length() - anchor_proj.s, opt, leaves);

  std::vector<detail::PathCandidate> candidates;
  candidates.reserve(leaves.size());
  for (auto& lanes : leaves) {
    std::vector<Vec2> pts{anchor_proj.point};
    for (std::size_t i = anchor_proj.segment + 1; i < first.size(); ++i) {
      pts.push_back(first.points()[i]);
    }
    for (std::size_t k = 1; k < lanes.size(); ++k) {
      const auto& lp = g.lanes.at(lanes[k]).points();
      for (std::size_t i = 0; i < lp.size(); ++i) {
        if (i == 0 && distance(lp[0], pts.back()) < 1e-6) continue;
        pts.push_back(lp[i]);
      }
    }
    const Polyline raw = Polyline(std::move(pts)).truncated(opt.max_length);
    detail::PathCandidate c{std::move(lanes), Polyline(raw.resample(opt.spacing)), kInf};
    c.endpoint_distance = c.line.project(final).distance;
    candidates.push_back(std::move(c));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const detail::PathCandidate& a, const detail::PathCandidate& b) {
              return std::tie(a.endpoint_distance, a.lanes) <
                     std::tie(b.endpoint_distance, b.lanes);
            });
  if (candidates.size() > opt.max_paths) candidates.resize(opt.max_paths);

  std::vector<SdcPath> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(make_sdc_path(candidates[i].line.points(), i == 0));
  }
  return out;
}

// Paths for one object from its first and last valid logged positions.
inline std::vector<SdcPath> reconstruct_paths_for(const LaneGraph& g, const SceneObject& obj,
                                                  const PathOptions& opt = {}) {
  const ObjectState* first = nullptr;
  const ObjectState* last = nullptr;
  for (const ObjectState& s : obj.states) {
    if (!s.valid) continue;
    if (first == nullptr) first = &s;
    last = &s;
  }
  if (first == nullptr) throw Error("object has no valid state");
  return reconstruct_paths(g, first->position(), last->position(), opt);
}

}  // namespace midsim
