#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "midsim/metrics.hpp"
#include "midsim/scenario.hpp"
#include "midsim/scene_context.hpp"

namespace midsim {

struct RenderOptions {
  double pixels_per_meter = 4.0;
  double margin = 10.0;  // m
  double max_join_gap = 6.0;  // m; farther roadgraph neighbours start a new polyline
};

namespace detail {

struct RoadStyle {
  const char* stroke;
  double width;
  const char* dash;
};

inline RoadStyle road_style(RoadgraphType t) {
  switch (t) {
    case RoadgraphType::kLaneCenter: return {"#9aa5b1", 0.15, "1 1"};
    case RoadgraphType::kRoadLine: return {"#e0b000", 0.15, ""};
    case RoadgraphType::kRoadEdge: return {"#222222", 0.3, ""};
    case RoadgraphType::kStopSign: return {"#d0021b", 0.5, ""};
    case RoadgraphType::kCrosswalk: return {"#7b61ff", 0.3, ""};
    case RoadgraphType::kSpeedBump: return {"#f5a623", 0.3, ""};
    case RoadgraphType::kOther: return {"#bbbbbb", 0.15, ""};
  }
  return {"#bbbbbb", 0.15, ""};
}

inline const char* light_color(LightState s) {
  switch (s) {
    case LightState::kRed: return "#d0021b";
    case LightState::kYellow: return "#f5a623";
    case LightState::kGreen: return "#2e9e44";
    case LightState::kUnknown: return "#888888";
  }
  return "#888888";
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Bird's-eye SVG of a scenario, optionally with a rollout. World +y points up.
// Without a rollout (null or no trajectories) only the map is drawn. Object
// boxes show the first collision step if there is one, else the last step.
inline std::string render_svg(const Scenario& s, const Rollout* rollout = nullptr,
                              const RenderOptions& opt = {}) {
  using detail::num;
  const bool has_rollout = rollout != nullptr && !rollout->trajectories.empty();

  std::optional<CollisionInfo> collision;
  int shown_step = -1;
  int collision_partner_id = -1;
  if (has_rollout) {
    shown_step = rollout->termination_step;
    if (rollout->scenario) {
      const auto scene = SceneContext::build(rollout->scenario);
      const CollisionInfo c = overlap_collision(make_view(*rollout, *scene));
      if (c.collided) {
        collision = c;
        shown_step = c.step;
        collision_partner_id = s.objects[static_cast<std::size_t>(c.partner)].meta.id;
      }
    }
  }

  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  auto grow = [&](double x, double y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
  };
  for (const auto& p : s.roadgraph) grow(p.x, p.y);
  for (const auto& p : s.sdc_paths) {
    for (const Vec2 w : p.waypoints) grow(w.x, w.y);
  }
  if (has_rollout) {
    for (const auto& traj : rollout->trajectories) {
      const int last = std::min<int>(shown_step, static_cast<int>(traj.size()) - 1);
      for (int k = 0; k <= last; ++k) {
        if (traj[static_cast<std::size_t>(k)].valid) {
          grow(traj[static_cast<std::size_t>(k)].x, traj[static_cast<std::size_t>(k)].y);
        }
      }
    }
  }
  if (!(x0 <= x1)) {
    x0 = y0 = -10.0;
    x1 = y1 = 10.0;
  }
  x0 -= opt.margin;
  y0 -= opt.margin;
  x1 += opt.margin;
  y1 += opt.margin;
  const double ppm = opt.pixels_per_meter;
  const double legend_h = 18.0 * 4 + 10.0;
  const double width = (x1 - x0) * ppm;
  const double height = (y1 - y0) * ppm + legend_h;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  // World group: metres, y flipped.
  svg += "<g transform=\"translate(" + num(-x0 * ppm) + " " + num(y1 * ppm) + ") scale(" +
         num(ppm) + " " + num(-ppm) + ")\">\n";

  svg += "<g id=\"roadgraph\" fill=\"none\" stroke-linecap=\"round\">\n";
  std::size_t i = 0;
  while (i < s.roadgraph.size()) {
    std::size_t j = i + 1;
    while (j < s.roadgraph.size() && s.roadgraph[j].type == s.roadgraph[i].type &&
           s.roadgraph[j].lane_id == s.roadgraph[i].lane_id &&
           norm(s.roadgraph[j].position() - s.roadgraph[j - 1].position()) <= opt.max_join_gap) {
      ++j;
    }
    const auto style = detail::road_style(s.roadgraph[i].type);
    std::string attrs = " stroke=\"" + std::string(style.stroke) + "\" stroke-width=\"" +
                        num(style.width) + "\"";
    if (*style.dash != '\0') attrs += " stroke-dasharray=\"" + std::string(style.dash) + "\"";
    attrs += " class=\"" + std::string(to_string(s.roadgraph[i].type)) + "\"";
    if (j - i == 1) {
      svg += "<circle cx=\"" + num(s.roadgraph[i].x) + "\" cy=\"" + num(s.roadgraph[i].y) +
             "\" r=\"" + num(style.width) + "\"" + attrs + "/>\n";
    } else {
      svg += "<polyline points=\"";
      for (std::size_t k = i; k < j; ++k) {
        if (k > i) svg += ' ';
        svg += num(s.roadgraph[k].x) + "," + num(s.roadgraph[k].y);
      }
      svg += "\"" + attrs + "/>\n";
    }
    i = j;
  }
  svg += "</g>\n";

  svg += "<g id=\"sdc_paths\" fill=\"none\">\n";
  // Off-route first so the on-route path sits on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& p : s.sdc_paths) {
      if (p.on_route != (pass == 1) || p.waypoints.size() < 2) continue;
      svg += "<polyline points=\"";
      for (std::size_t k = 0; k < p.waypoints.size(); ++k) {
        if (k > 0) svg += ' ';
        svg += num(p.waypoints[k].x) + "," + num(p.waypoints[k].y);
      }
      svg += p.on_route ? "\" stroke=\"#1f77b4\" stroke-width=\"0.6\" stroke-opacity=\"0.8\" "
                          "class=\"on_route\"/>\n"
                        : "\" stroke=\"#9ecae1\" stroke-width=\"0.3\" stroke-opacity=\"0.6\" "
                          "class=\"off_route\"/>\n";
    }
  }
  svg += "</g>\n";

  svg += "<g id=\"traffic_lights\">\n";
  for (const auto& tl : s.traffic_lights) {
    LightState st = LightState::kUnknown;
    const int t = has_rollout ? shown_step : kInitSteps - 1;
    if (!tl.states.empty()) {
      st = tl.states[static_cast<std::size_t>(
          std::clamp(t, 0, static_cast<int>(tl.states.size()) - 1))];
    }
    svg += "<circle cx=\"" + num(tl.stop_x) + "\" cy=\"" + num(tl.stop_y) +
           "\" r=\"0.8\" fill=\"" + detail::light_color(st) + "\"/>\n";
  }
  svg += "</g>\n";

  if (has_rollout) {
    const int ego = rollout->ego_index;
    const auto& trail = rollout->trajectories[static_cast<std::size_t>(ego)];
    svg += "<polyline id=\"ego_trail\" fill=\"none\" stroke=\"#2e9e44\" stroke-width=\"0.4\" "
           "points=\"";
    bool first = true;
    const int last = std::min<int>(shown_step, static_cast<int>(trail.size()) - 1);
    for (int k = 0; k <= last; ++k) {
      const ObjectState& st = trail[static_cast<std::size_t>(k)];
      if (!st.valid) continue;
      if (!first) svg += ' ';
      first = false;
      svg += num(st.x) + "," + num(st.y);
    }
    svg += "\"/>\n";

    svg += "<g id=\"objects\" stroke=\"#000000\" stroke-width=\"0.1\">\n";
    for (std::size_t o = 0; o < rollout->trajectories.size() && o < s.objects.size(); ++o) {
      const auto& traj = rollout->trajectories[o];
      if (shown_step < 0 || shown_step >= static_cast<int>(traj.size())) continue;
      const ObjectState& st = traj[static_cast<std::size_t>(shown_step)];
      if (!st.valid) continue;
      const ObjectMetadata& m = s.objects[o].meta;
      const OrientedBox box{st.position(), st.yaw, m.length, m.width};
      const char* fill = static_cast<int>(o) == ego ? "#2e9e44" : "#4a90d9";
      if (collision && (static_cast<int>(o) == ego || static_cast<int>(o) == collision->partner)) {
        fill = "#d0021b";
      }
      svg += "<polygon points=\"";
      const auto c = box.corners();
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (k > 0) svg += ' ';
        svg += num(c[k].x) + "," + num(c[k].y);
      }
      svg += "\" fill=\"" + std::string(fill) + "\" fill-opacity=\"0.8\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</g>\n";

  // Legend below the map, in pixels.
  const double ly = (y1 - y0) * ppm + 16.0;
  auto text = [&](int row, const std::string& t) {
    svg += "<text x=\"8\" y=\"" + num(ly + 18.0 * row) +
           "\" font-family=\"monospace\" font-size=\"12\" fill=\"#000000\">" +
           detail::escape_xml(t) + "</text>\n";
  };
  svg += "<g id=\"legend\">\n";
  text(0, "scenario " + s.id);
  if (!has_rollout) {
    text(1, "map only");
  } else {
    text(1, "shown step " + std::to_string(shown_step) + ", terminated at step " +
                std::to_string(rollout->termination_step) + " (" +
                std::string(to_string(rollout->termination_cause)) + ")");
    if (collision) {
      text(2, "collision at step " + std::to_string(collision->step) + " with object " +
                  std::to_string(collision_partner_id));
    } else {
      text(2, "no collision");
    }
  }
  text(3, "ego green, others blue, on-route path dark blue, road edges black");
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace midsim
