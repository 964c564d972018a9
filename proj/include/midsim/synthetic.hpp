#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "midsim/geometry.hpp"
#include "midsim/scenario.hpp"
#include "midsim/sdc_paths.hpp"

namespace midsim {

// Piece of a planar curve whose curvature varies linearly with arclength.
struct CurvaturePiece {
  double length = 0.0;
  double k0 = 0.0;
  double k1 = 0.0;
};

struct Pose {
  Vec2 position{};
  double heading = 0.0;
  double curvature = 0.0;
};

// Densely integrated arclength-parameterized curve.
class Track {
 public:
  static constexpr double kStep = 0.01;  // m

  Track() = default;
  Track(Vec2 start, double heading, std::span<const CurvaturePiece> pieces) {
    Pose p{start, heading, pieces.empty() ? 0.0 : pieces.front().k0};
    poses_.push_back(p);
    for (const CurvaturePiece& piece : pieces) {
      const auto n = static_cast<int>(std::ceil(piece.length / kStep - 1e-9));
      if (n <= 0) continue;
      const double h = piece.length / n;
      const double base_heading = p.heading;
      const Vec2 base = p.position;
      const double dk = (piece.k1 - piece.k0) / piece.length;
      auto heading_at = [&](double u) {
        return base_heading + piece.k0 * u + 0.5 * dk * u * u;
      };
      Vec2 pos = base;
      for (int i = 1; i <= n; ++i) {
        const double u0 = (i - 1) * h;
        const double u1 = i * h;
        // Simpson on the unit tangent over the sub-step.
        const Vec2 t0 = heading_vector(heading_at(u0));
        const Vec2 tm = heading_vector(heading_at(0.5 * (u0 + u1)));
        const Vec2 t1 = heading_vector(heading_at(u1));
        pos += (t0 + tm * 4.0 + t1) * (h / 6.0);
        poses_.push_back({pos, heading_at(u1), piece.k0 + dk * u1});
      }
      p = poses_.back();
    }
    s_.reserve(poses_.size());
    s_.push_back(0.0);
    double s = 0.0;
    for (const CurvaturePiece& piece : pieces) {
      const auto n = static_cast<int>(std::ceil(piece.length / kStep - 1e-9));
      if (n <= 0) continue;
      const double h = piece.length / n;
      for (int i = 1; i <= n; ++i) s_.push_back(s + i * h);
      s += piece.length;
    }
  }

  double length() const { return s_.empty() ? 0.0 : s_.back(); }

  Pose at(double s) const {
    if (poses_.empty()) return {};
    if (s <= 0.0) return poses_.front();
    if (s >= length()) return poses_.back();
    const auto it = std::upper_bound(s_.begin(), s_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - s_.begin()) - 1;
    const double f = (s - s_[i]) / (s_[i + 1] - s_[i]);
    const Pose& a = poses_[i];
    const Pose& b = poses_[i + 1];
    return {a.position + (b.position - a.position) * f, a.heading + (b.heading - a.heading) * f,
            a.curvature + (b.curvature - a.curvature) * f};
  }

  // Point offset to the left of the curve.
  Vec2 offset_point(double s, double lateral) const {
    const Pose p = at(s);
    return p.position + left_normal(heading_vector(p.heading)) * lateral;
  }

  // Samples [s0, s1] at `spacing`, endpoint included.
  std::vector<Pose> sample(double s0, double s1, double spacing, double lateral = 0.0) const {
    std::vector<Pose> out;
    const double span = s1 - s0;
    const auto n = static_cast<int>(std::ceil(span / spacing - 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double s = std::min(s0 + i * spacing, s1);
      Pose p = at(s);
      p.position = offset_point(s, lateral);
      out.push_back(p);
    }
    return out;
  }

 private:
  std::vector<Pose> poses_;
  std::vector<double> s_;
};

enum class SyntheticLayout : std::uint8_t { kStraight = 0, kArc, kTIntersection, kCutIn };

inline std::string_view to_string(SyntheticLayout l) {
  switch (l) {
    case SyntheticLayout::kStraight: return "straight";
    case SyntheticLayout::kArc: return "arc";
    case SyntheticLayout::kTIntersection: return "t_intersection";
    case SyntheticLayout::kCutIn: return "cut_in";
  }
  return "straight";
}

inline std::optional<SyntheticLayout> synthetic_layout_from_string(std::string_view s) {
  for (auto l : {SyntheticLayout::kStraight, SyntheticLayout::kArc,
                 SyntheticLayout::kTIntersection, SyntheticLayout::kCutIn}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

enum class TurnDirection : std::uint8_t { kRight = 0, kLeft };

enum class SpeedProfileKind : std::uint8_t { kConstant = 0, kStop, kAccelerate };

struct SpeedProfile {
  SpeedProfileKind kind = SpeedProfileKind::kConstant;
  double start_time = 3.0;  // s, ramp begins
  double duration = 4.0;    // s, ramp length
  double target_speed = 0.0;  // kAccelerate only
};

struct VehicleSpec {
  double gap = 20.0;    // m, center distance along the route
  double speed = 10.0;  // m/s
};

struct ParkedSpec {
  double s = 60.0;         // m along the ego route
  double lateral = -1.8;   // m, left positive
};

struct SyntheticSpec {
  SyntheticLayout layout = SyntheticLayout::kStraight;
  double length = 200.0;         // m of ego road (straight, arc, cut-in)
  double curvature = 0.02;       // 1/m, arc only
  double ramp_length = 20.0;     // m of clothoid into the arc
  TurnDirection turn = TurnDirection::kRight;  // t-intersection only
  double ego_speed = 10.0;       // m/s
  double ego_start = 10.0;       // m along the route at t = 0
  SpeedProfile profile{};
  double speed_limit = 13.4;     // m/s on every lane, 0 = unknown
  std::optional<VehicleSpec> lead;
  std::optional<VehicleSpec> follower;
  std::optional<ParkedSpec> parked;
  bool cut_in = true;            // cut-in layout: vehicle merging from the left lane
  VehicleSpec cut_in_vehicle{25.0, 10.0};
  int oncoming = -1;             // straight only; -1 lets the seed choose 0..2
  std::optional<LightState> light;  // straight: stop line at light_s; t-intersection: always
  double light_s = 80.0;
  double ego_length = 4.5;
  double ego_width = 2.0;
};

namespace detail {

inline constexpr double kLaneWidth = 3.5;
inline constexpr double kHalfLane = 1.75;
inline constexpr double kRoadgraphSpacing = 1.0;
inline constexpr double kTurnRadiusRight = 10.0;
inline constexpr double kTurnRamp = 5.0;
inline constexpr double kStemLength = 40.0;
inline constexpr double kMainHalfLength = 80.0;

// Right (sign -1) or left (+1) quarter turn with clothoid ramps.
inline std::vector<CurvaturePiece> quarter_turn(double radius, double sign) {
  const double k = sign / radius;
  const double ramp_angle = 0.5 * kTurnRamp / radius;
  const double arc = (0.5 * kPi - 2.0 * ramp_angle) * radius;
  return {{kTurnRamp, 0.0, k}, {arc, k, k}, {kTurnRamp, k, 0.0}};
}

// Displacement of a quarter turn that starts at the origin heading +x.
inline Vec2 quarter_turn_displacement(double radius, double sign) {
  const auto pieces = quarter_turn(radius, sign);
  const Track t({0.0, 0.0}, 0.0, pieces);
  return t.at(t.length()).position;
}

inline double track_length(std::span<const CurvaturePiece> pieces) {
  double s = 0.0;
  for (const auto& p : pieces) s += p.length;
  return s;
}

struct Builder {
  Scenario scenario;

  void add_polyline(const std::vector<Pose>& poses, RoadgraphType type, std::int32_t id,
                    double speed_limit, bool reversed = false) {
    std::vector<Pose> pts = poses;
    if (reversed) std::reverse(pts.begin(), pts.end());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec2 dir;
      if (pts.size() >= 2) {
        const Vec2 d = i + 1 < pts.size() ? pts[i + 1].position - pts[i].position
                                          : pts[i].position - pts[i - 1].position;
        dir = normalized(d);
      }
      scenario.roadgraph.push_back(
          {pts[i].position.x, pts[i].position.y, dir.x, dir.y, type, id, speed_limit});
    }
  }
};

// Distance along the route as a function of time for the ego profile.
struct ProfileEval {
  double s0 = 0.0;
  double v0 = 0.0;
  SpeedProfile p;

  double speed(double t) const {
    if (p.kind == SpeedProfileKind::kConstant || t <= p.start_time) return v0;
    const double tau = std::min(t - p.start_time, p.duration);
    const double phase = kPi * tau / p.duration;
    if (p.kind == SpeedProfileKind::kStop) return v0 * 0.5 * (1.0 + std::cos(phase));
    return v0 + (p.target_speed - v0) * 0.5 * (1.0 - std::cos(phase));
  }

  double distance(double t) const {
    if (p.kind == SpeedProfileKind::kConstant || t <= p.start_time) return s0 + v0 * t;
    const double base = s0 + v0 * p.start_time;
    const double tau = std::min(t - p.start_time, p.duration);
    const double tail = std::max(0.0, t - p.start_time - p.duration);
    const double w = kPi / p.duration;
    if (p.kind == SpeedProfileKind::kStop) {
      return base + v0 * 0.5 * (tau + std::sin(w * tau) / w);
    }
    const double dv = p.target_speed - v0;
    const double ramp = v0 * tau + 0.5 * dv * (tau - std::sin(w * tau) / w);
    return base + ramp + p.target_speed * tail;
  }
};

inline ObjectState state_on(const Track& track, double s, double lateral, double speed,
                            bool reverse, double lateral_rate = 0.0) {
  const Pose pose = track.at(s);
  const Vec2 pos = track.offset_point(s, lateral);
  double heading = reverse ? pose.heading + kPi : pose.heading;
  const Vec2 fwd = heading_vector(heading);
  Vec2 vel = fwd * speed;
  if (lateral_rate != 0.0) {
    vel = vel + left_normal(heading_vector(pose.heading)) * lateral_rate;
    heading = std::atan2(vel.y, vel.x);
  }
  return {pos.x, pos.y, wrap_angle(heading), vel.x, vel.y, true};
}

}  // namespace detail

// Deterministic scenario for (spec, seed). Throws Error on infeasible specs.
inline Scenario generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  using namespace detail;
  std::mt19937_64 rng(seed);
  Builder b;
  Scenario& sc = b.scenario;
  sc.id = std::string("syn-") + std::string(to_string(spec.layout)) + "-" + std::to_string(seed);
  const double limit = spec.speed_limit;
  if (!(spec.ego_speed >= 0.0) || !(spec.length > 0.0)) throw Error("infeasible spec: bad speed or length");

  Track route;
  std::optional<double> stop_line_s;  // on the ego route
  Vec2 stop_point{};
  std::int32_t light_lane = 1;

  auto corridor = [&](const Track& t, bool two_lane) {
    // Ego lane, neighbor lane on the left (same or opposite direction), edges.
    const double L = t.length();
    b.add_polyline(t.sample(0.0, L, kRoadgraphSpacing), RoadgraphType::kLaneCenter, 1, limit);
    b.add_polyline(t.sample(0.0, L, kRoadgraphSpacing, kLaneWidth), RoadgraphType::kLaneCenter,
                   two_lane ? 3 : 2, limit, !two_lane);
    b.add_polyline(t.sample(0.0, L, kRoadgraphSpacing, -kHalfLane), RoadgraphType::kRoadEdge, 100,
                   0.0);
    b.add_polyline(t.sample(0.0, L, kRoadgraphSpacing, kLaneWidth + kHalfLane),
                   RoadgraphType::kRoadEdge, 101, 0.0, true);
    b.add_polyline(t.sample(0.0, L, kRoadgraphSpacing, kHalfLane), RoadgraphType::kRoadLine, 200,
                   0.0);
  };

  switch (spec.layout) {
    case SyntheticLayout::kStraight:
    case SyntheticLayout::kCutIn: {
      const CurvaturePiece piece{spec.length, 0.0, 0.0};
      route = Track({0.0, 0.0}, 0.0, std::span(&piece, 1));
      corridor(route, spec.layout == SyntheticLayout::kCutIn);
      if (spec.layout == SyntheticLayout::kStraight && spec.light) {
        stop_line_s = spec.light_s;
      }
      break;
    }
    case SyntheticLayout::kArc: {
      const double k = spec.curvature;
      if (std::abs(k) * (kLaneWidth + kHalfLane) >= 0.5) throw Error("infeasible spec: curvature");
      const double straight = 20.0;
      const double rest = spec.length - straight - spec.ramp_length;
      if (rest <= 0.0) throw Error("infeasible spec: arc shorter than its ramp");
      const std::vector<CurvaturePiece> pieces{
          {straight, 0.0, 0.0}, {spec.ramp_length, 0.0, k}, {rest, k, k}};
      route = Track({0.0, 0.0}, 0.0, pieces);
      corridor(route, false);
      break;
    }
    case SyntheticLayout::kTIntersection: {
      const double d = quarter_turn_displacement(kTurnRadiusRight, -1.0).x;
      // Left turn ends in the far lane: its displacement is d + one lane wider.
      double lo = kTurnRadiusRight;
      double hi = 4.0 * kTurnRadiusRight;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (quarter_turn_displacement(mid, 1.0).x < d + kLaneWidth ? lo : hi) = mid;
      }
      const double radius_left = 0.5 * (lo + hi);
      const double y_turn = -kHalfLane - d;
      const double approach = y_turn + kStemLength;
      const double X = kMainHalfLength;

      auto turn_r = quarter_turn(kTurnRadiusRight, -1.0);
      auto turn_l = quarter_turn(radius_left, 1.0);
      std::vector<CurvaturePiece> pr{{approach, 0.0, 0.0}};
      pr.insert(pr.end(), turn_r.begin(), turn_r.end());
      pr.push_back({X - (kHalfLane + d), 0.0, 0.0});
      std::vector<CurvaturePiece> pl{{approach, 0.0, 0.0}};
      pl.insert(pl.end(), turn_l.begin(), turn_l.end());
      pl.push_back({X - (kHalfLane + d), 0.0, 0.0});
      const Vec2 stem_start{kHalfLane, -kStemLength};
      const Track tr(stem_start, 0.5 * kPi, pr);
      const Track tl(stem_start, 0.5 * kPi, pl);
      const double turn_len_r = track_length(turn_r);
      const double turn_len_l = track_length(turn_l);

      // Eastbound main lane turning down into the southbound stem.
      std::vector<CurvaturePiece> ps{{X - kHalfLane - d, 0.0, 0.0}};
      ps.insert(ps.end(), turn_r.begin(), turn_r.end());
      ps.push_back({approach, 0.0, 0.0});
      const Track ts({-X, -kHalfLane}, 0.0, ps);
      const CurvaturePiece west_piece{2.0 * X, 0.0, 0.0};
      const Track tw({X, kHalfLane}, kPi, std::span(&west_piece, 1));
      const CurvaturePiece through_piece{2.0 * (kHalfLane + d), 0.0, 0.0};
      const Track tt({-kHalfLane - d, -kHalfLane}, 0.0, std::span(&through_piece, 1));

      auto lane = [&](const Track& t, double s0, double s1, std::int32_t id) {
        b.add_polyline(t.sample(s0, s1, kRoadgraphSpacing), RoadgraphType::kLaneCenter, id, limit);
      };
      lane(tr, 0.0, approach, 10);
      lane(tr, approach, approach + turn_len_r, 11);
      lane(tr, approach + turn_len_r, tr.length(), 12);
      lane(tl, approach, approach + turn_len_l, 13);
      lane(tl, approach + turn_len_l, tl.length(), 14);
      lane(ts, 0.0, X - kHalfLane - d, 20);
      lane(tt, 0.0, tt.length(), 21);
      lane(ts, X - kHalfLane - d, X - kHalfLane - d + turn_len_r, 22);
      lane(ts, X - kHalfLane - d + turn_len_r, ts.length(), 23);
      lane(tw, 0.0, X + kHalfLane + d, 30);
      b.add_polyline(tr.sample(0.0, tr.length(), kRoadgraphSpacing, -kHalfLane),
                     RoadgraphType::kRoadEdge, 100, 0.0);
      b.add_polyline(ts.sample(0.0, ts.length(), kRoadgraphSpacing, -kHalfLane),
                     RoadgraphType::kRoadEdge, 101, 0.0);
      b.add_polyline(tw.sample(0.0, tw.length(), kRoadgraphSpacing, -kHalfLane),
                     RoadgraphType::kRoadEdge, 102, 0.0);

      route = spec.turn == TurnDirection::kRight ? tr : tl;
      stop_line_s = approach;
      light_lane = 10;
      break;
    }
  }
  if (stop_line_s) stop_point = route.at(*stop_line_s).position;

  // Ego profile: a red stop line ahead forces a smooth stop in front of it.
  ProfileEval ego{spec.ego_start, spec.ego_speed, spec.profile};
  const double horizon_t = (kHorizon - 1) * kDt;
  const LightState light_state =
      spec.light.value_or(spec.layout == SyntheticLayout::kTIntersection ? LightState::kGreen
                                                                         : LightState::kUnknown);
  const bool has_light = stop_line_s.has_value();
  if (has_light && light_state == LightState::kRed &&
      ego.distance(horizon_t) + 0.5 * spec.ego_length > *stop_line_s - 1.0) {
    const double stop_front = *stop_line_s - 1.0;
    const double stop_center = stop_front - 0.5 * spec.ego_length;
    // Cosine stop with a 3 m/s^2 peak deceleration.
    const double brake_time = std::max(3.0, spec.ego_speed * kPi / 6.0);
    const double brake_dist = spec.ego_speed * brake_time * 0.5;
    const double begin = stop_center - brake_dist;
    if (spec.ego_speed <= 0.0 || begin < spec.ego_start) {
      throw Error("infeasible spec: cannot stop before the red light");
    }
    ego.p = {SpeedProfileKind::kStop, (begin - spec.ego_start) / spec.ego_speed, brake_time, 0.0};
  }
  if (ego.distance(horizon_t) > route.length() - 1.0) {
    throw Error("infeasible spec: ego leaves the road within the horizon");
  }

  auto push_object = [&](std::int32_t id, bool sdc, double length, double width,
                         auto&& state_at) {
    SceneObject o;
    o.meta = {id, ObjectClass::kVehicle, length, width, sdc, sdc};
    o.states.reserve(kHorizon);
    for (int t = 0; t < kHorizon; ++t) o.states.push_back(state_at(t * kDt));
    sc.objects.push_back(std::move(o));
  };

  push_object(0, true, spec.ego_length, spec.ego_width, [&](double t) {
    return state_on(route, ego.distance(t), 0.0, ego.speed(t), false);
  });
  std::int32_t next_id = 1;

  auto along_route = [&](const VehicleSpec& v, double offset_sign) {
    const double s0 = spec.ego_start + offset_sign * v.gap;
    if (s0 < 0.0 || s0 + v.speed * horizon_t > route.length()) {
      throw Error("infeasible spec: vehicle leaves the road within the horizon");
    }
    push_object(next_id++, false, 4.5, 2.0, [&, s0, v](double t) {
      return state_on(route, s0 + v.speed * t, 0.0, v.speed, false);
    });
  };
  if (spec.lead) along_route(*spec.lead, 1.0);
  if (spec.follower) along_route(*spec.follower, -1.0);
  if (spec.parked) {
    const ParkedSpec p = *spec.parked;
    if (p.s < 0.0 || p.s > route.length()) throw Error("infeasible spec: parked car off the road");
    push_object(next_id++, false, 4.5, 2.0,
                [&, p](double) { return state_on(route, p.s, p.lateral, 0.0, false); });
  }
  if (spec.layout == SyntheticLayout::kCutIn && spec.cut_in) {
    const VehicleSpec v = spec.cut_in_vehicle;
    const double s0 = spec.ego_start + v.gap;
    const double t_cut = 2.0;
    const double dur = 3.0;
    if (s0 + v.speed * horizon_t > route.length()) {
      throw Error("infeasible spec: cut-in vehicle leaves the road");
    }
    push_object(next_id++, false, 4.5, 2.0, [&, s0, v](double t) {
      const double tau = std::clamp(t - t_cut, 0.0, dur);
      const double lat = kLaneWidth * 0.5 * (1.0 + std::cos(kPi * tau / dur));
      const double rate = t > t_cut && t < t_cut + dur
                              ? -kLaneWidth * 0.5 * kPi / dur * std::sin(kPi * tau / dur)
                              : 0.0;
      return state_on(route, s0 + v.speed * t, lat, v.speed, false, rate);
    });
  }
  if (spec.layout == SyntheticLayout::kStraight) {
    const int count = spec.oncoming >= 0 ? spec.oncoming : static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> speed_dist(6.0, 12.0);
    for (int i = 0; i < count; ++i) {
      const double v = speed_dist(rng);
      const double lo = v * horizon_t + 5.0;
      const double hi = route.length() - 5.0;
      if (hi <= lo) break;
      const double s0 = std::uniform_real_distribution<double>(lo, hi)(rng);
      push_object(next_id++, false, 4.5, 2.0, [&, s0, v](double t) {
        return state_on(route, s0 - v * t, kLaneWidth, v, true);
      });
    }
  }

  if (has_light) {
    TrafficLightTrack tl;
    tl.lane_id = light_lane;
    tl.stop_x = stop_point.x;
    tl.stop_y = stop_point.y;
    tl.states.assign(kHorizon, light_state);
    sc.traffic_lights.push_back(std::move(tl));
  }

  // No logged object may overlap the expert.
  const SceneObject& ego_obj = sc.objects.front();
  for (std::size_t j = 1; j < sc.objects.size(); ++j) {
    for (int t = 0; t < kHorizon; ++t) {
      if (boxes_overlap(ego_obj.box_at(t), sc.objects[j].box_at(t))) {
        throw Error("infeasible spec: object " + std::to_string(sc.objects[j].meta.id) +
                    " overlaps the ego at step " + std::to_string(t));
      }
    }
  }

  const LaneGraph graph = build_lane_graph(sc.roadgraph);
  sc.sdc_paths = reconstruct_paths(graph, ego_obj.states.front().position(),
                                   ego_obj.states.back().position());
  if (const auto problems = validate_scenario(sc); !problems.empty()) {
    throw Error("generated scenario is invalid: " + problems.front());
  }
  return sc;
}

// Random spec whose expert is clean by construction.
inline SyntheticSpec sample_synthetic_spec(std::mt19937_64& rng) {
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  SyntheticSpec s;
  s.layout = static_cast<SyntheticLayout>(rng() % 4);
  s.ego_start = uniform(5.0, 20.0);
  switch (s.layout) {
    case SyntheticLayout::kStraight:
      s.ego_speed = uniform(4.0, 12.0);
      s.length = 200.0;
      if (rng() % 3 == 0) s.lead = VehicleSpec{uniform(12.0, 30.0), s.ego_speed};
      if (rng() % 4 == 0) {
        s.profile = {SpeedProfileKind::kAccelerate, uniform(1.0, 3.0), 4.0,
                     std::min(12.5, s.ego_speed + uniform(1.0, 3.0))};
        s.lead.reset();
      }
      if (rng() % 4 == 0) {
        s.light = rng() % 2 == 0 ? LightState::kRed : LightState::kGreen;
        s.light_s = uniform(60.0, 110.0);
        s.profile = {};
        s.lead.reset();
      }
      break;
    case SyntheticLayout::kArc: {
      s.ego_speed = uniform(5.0, 11.0);
      const double k_max = std::min(0.03, 3.0 / (s.ego_speed * s.ego_speed));
      s.curvature = uniform(0.005, k_max) * (rng() % 2 == 0 ? 1.0 : -1.0);
      s.length = 220.0;
      s.ramp_length = 25.0;
      break;
    }
    case SyntheticLayout::kTIntersection:
      s.ego_speed = uniform(4.0, 5.5);
      s.ego_start = uniform(2.0, 8.0);
      s.turn = rng() % 2 == 0 ? TurnDirection::kRight : TurnDirection::kLeft;
      s.light = rng() % 3 == 0 ? LightState::kRed : LightState::kGreen;
      break;
    case SyntheticLayout::kCutIn:
      s.ego_speed = uniform(6.0, 12.0);
      s.length = 220.0;
      s.cut_in_vehicle = {uniform(18.0, 30.0), s.ego_speed};
      break;
  }
  return s;
}

// `count` scenarios from one sampler stream; scenario i uses seed i, so ids
// are unique within a set.
inline std::vector<Scenario> synthetic_set(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const SyntheticSpec spec = sample_synthetic_spec(rng);
    out.push_back(generate_synthetic(spec, i));
  }
  return out;
}

}  // namespace midsim
