#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "midsim/scenario.hpp"
#include "midsim/sdc_paths.hpp"

namespace midsim {

// Container file: a sequence of records, each a little-endian u32 payload
// length followed by the payload. Payload layout (all little-endian):
//   "MSCN" u16 version
//   str id; i32 horizon; f64 dt
//   u32 n_objects, per object:
//     i32 id; u8 class; f64 length; f64 width; u8 flags (1 = sdc, 2 = controllable)
//     u32 n_states, per state: f64 x, y, yaw, vx, vy; u8 valid
//   u32 n_points, per point: f64 x, y, dir_x, dir_y; u8 type; i32 lane_id; f64 speed_limit
//   u32 n_lights, per light: i32 lane_id; f64 stop_x, stop_y; u32 n; n x u8 state
//   u32 n_paths, per path: u8 on_route; i32 valid_count; u32 n; n x (f64 x, y, arclength)
// where str is u32 byte length + bytes. Doubles are stored as their IEEE-754 bits.
// A sidecar "<file>.schema.json" names the format and schema version.
inline constexpr std::uint16_t kSchemaVersion = 1;
inline constexpr std::string_view kFormatName = "midsim.scenario";
inline constexpr std::uint32_t kMaxRecordBytes = 1u << 30;

namespace detail {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }
  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw Error("record truncated at byte " + std::to_string(pos_));
    const std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  // Count of items of at least `item_bytes` each; rejects counts the payload cannot hold.
  std::uint32_t count(std::size_t item_bytes) {
    const std::uint32_t n = u32();
    if (static_cast<std::uint64_t>(n) * item_bytes > data_.size() - pos_) {
      throw Error("count " + std::to_string(n) + " exceeds record size");
    }
    return n;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  template <typename U>
  U get() {
    const std::string_view b = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(b[i])) << (8 * i));
    }
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

template <typename E>
E checked_enum(std::uint8_t v, std::size_t n, const char* what) {
  if (v >= n) throw Error(std::string("invalid ") + what + " " + std::to_string(v));
  return static_cast<E>(v);
}

}  // namespace detail

inline std::string encode_scenario(const Scenario& s) {
  detail::Writer w;
  w.raw("MSCN");
  w.u16(kSchemaVersion);
  w.str(s.id);
  w.i32(s.horizon);
  w.f64(s.dt);
  w.u32(static_cast<std::uint32_t>(s.objects.size()));
  for (const SceneObject& o : s.objects) {
    w.i32(o.meta.id);
    w.u8(static_cast<std::uint8_t>(o.meta.object_class));
    w.f64(o.meta.length);
    w.f64(o.meta.width);
    w.u8(static_cast<std::uint8_t>((o.meta.is_sdc ? 1 : 0) | (o.meta.is_controllable ? 2 : 0)));
    w.u32(static_cast<std::uint32_t>(o.states.size()));
    for (const ObjectState& st : o.states) {
      w.f64(st.x);
      w.f64(st.y);
      w.f64(st.yaw);
      w.f64(st.vx);
      w.f64(st.vy);
      w.u8(st.valid ? 1 : 0);
    }
  }
  w.u32(static_cast<std::uint32_t>(s.roadgraph.size()));
  for (const RoadgraphPoint& p : s.roadgraph) {
    w.f64(p.x);
    w.f64(p.y);
    w.f64(p.dir_x);
    w.f64(p.dir_y);
    w.u8(static_cast<std::uint8_t>(p.type));
    w.i32(p.lane_id);
    w.f64(p.speed_limit);
  }
  w.u32(static_cast<std::uint32_t>(s.traffic_lights.size()));
  for (const TrafficLightTrack& l : s.traffic_lights) {
    w.i32(l.lane_id);
    w.f64(l.stop_x);
    w.f64(l.stop_y);
    w.u32(static_cast<std::uint32_t>(l.states.size()));
    for (LightState st : l.states) w.u8(static_cast<std::uint8_t>(st));
  }
  w.u32(static_cast<std::uint32_t>(s.sdc_paths.size()));
  for (const SdcPath& p : s.sdc_paths) {
    w.u8(p.on_route ? 1 : 0);
    w.i32(p.valid_count);
    const std::size_t n = p.waypoints.size();
    w.u32(static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      w.f64(p.waypoints[i].x);
      w.f64(p.waypoints[i].y);
      w.f64(i < p.arclength.size() ? p.arclength[i] : 0.0);
    }
  }
  return w.take();
}

// Parses one payload. Structural problems throw; invariants are not checked here.
inline Scenario decode_scenario(std::string_view payload) {
  detail::Reader r(payload);
  if (r.take(4) != "MSCN") throw Error("bad record magic");
  if (const auto v = r.u16(); v != kSchemaVersion) {
    throw Error("unsupported schema version " + std::to_string(v));
  }
  Scenario s;
  s.id = r.str();
  s.horizon = r.i32();
  s.dt = r.f64();
  const std::uint32_t n_obj = r.count(30);
  s.objects.resize(n_obj);
  for (SceneObject& o : s.objects) {
    o.meta.id = r.i32();
    o.meta.object_class = detail::checked_enum<ObjectClass>(r.u8(), 4, "object class");
    o.meta.length = r.f64();
    o.meta.width = r.f64();
    const std::uint8_t flags = r.u8();
    if (flags > 3) throw Error("invalid object flags");
    o.meta.is_sdc = flags & 1;
    o.meta.is_controllable = flags & 2;
    o.states.resize(r.count(41));
    for (ObjectState& st : o.states) {
      st.x = r.f64();
      st.y = r.f64();
      st.yaw = r.f64();
      st.vx = r.f64();
      st.vy = r.f64();
      const std::uint8_t valid = r.u8();
      if (valid > 1) throw Error("invalid state flag");
      st.valid = valid == 1;
    }
  }
  s.roadgraph.resize(r.count(45));
  for (RoadgraphPoint& p : s.roadgraph) {
    p.x = r.f64();
    p.y = r.f64();
    p.dir_x = r.f64();
    p.dir_y = r.f64();
    p.type = detail::checked_enum<RoadgraphType>(r.u8(), kNumRoadgraphTypes, "roadgraph type");
    p.lane_id = r.i32();
    p.speed_limit = r.f64();
  }
  s.traffic_lights.resize(r.count(24));
  for (TrafficLightTrack& l : s.traffic_lights) {
    l.lane_id = r.i32();
    l.stop_x = r.f64();
    l.stop_y = r.f64();
    l.states.resize(r.count(1));
    for (LightState& st : l.states) {
      st = detail::checked_enum<LightState>(r.u8(), kNumLightStates, "light state");
    }
  }
  s.sdc_paths.resize(r.count(9));
  for (SdcPath& p : s.sdc_paths) {
    const std::uint8_t on = r.u8();
    if (on > 1) throw Error("invalid on_route flag");
    p.on_route = on == 1;
    p.valid_count = r.i32();
    const std::uint32_t n = r.count(24);
    p.waypoints.resize(n);
    p.arclength.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      p.waypoints[i].x = r.f64();
      p.waypoints[i].y = r.f64();
      p.arclength[i] = r.f64();
    }
  }
  if (!r.done()) throw Error("trailing bytes in record");
  return s;
}

inline std::string encode_record(const Scenario& s) {
  const std::string payload = encode_scenario(s);
  detail::Writer w;
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return w.take();
}

// Streams validated scenarios from a container. Invalid records are skipped
// and counted; a truncated tail ends the stream with one warning.
class ScenarioReader {
 public:
  explicit ScenarioReader(std::istream& in) : in_(in) {}

  std::optional<Scenario> next() {
    while (!finished_) {
      std::string payload;
      if (!read_record(payload)) {
        finished_ = true;
        break;
      }
      ++record_;
      try {
        Scenario s = decode_scenario(payload);
        if (auto problems = validate_scenario(s); !problems.empty()) {
          warn("record " + std::to_string(record_) + " (" + s.id + "): " + problems.front());
          continue;
        }
        return s;
      } catch (const Error& e) {
        warn("record " + std::to_string(record_) + ": " + e.what());
      }
    }
    return std::nullopt;
  }

  std::size_t warnings() const { return diagnostics_.size(); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  bool read_record(std::string& payload) {
    char len_bytes[4];
    in_.read(len_bytes, 4);
    const auto got = in_.gcount();
    if (got == 0) return false;
    if (got < 4) {
      warn("truncated length prefix after record " + std::to_string(record_));
      return false;
    }
    const std::uint32_t len = detail::Reader(std::string_view(len_bytes, 4)).u32();
    if (len > kMaxRecordBytes) {
      warn("record length " + std::to_string(len) + " exceeds limit; stopping");
      return false;
    }
    // Grow in chunks so a corrupt length cannot force a huge allocation.
    payload.clear();
    constexpr std::uint32_t kChunk = 1u << 20;
    while (payload.size() < len) {
      const std::size_t want = std::min<std::size_t>(kChunk, len - payload.size());
      const std::size_t old = payload.size();
      payload.resize(old + want);
      in_.read(payload.data() + old, static_cast<std::streamsize>(want));
      if (static_cast<std::size_t>(in_.gcount()) < want) {
        warn("truncated record " + std::to_string(record_ + 1));
        return false;
      }
    }
    return true;
  }
  void warn(std::string msg) { diagnostics_.push_back(std::move(msg)); }

  std::istream& in_;
  std::size_t record_ = 0;
  bool finished_ = false;
  std::vector<std::string> diagnostics_;
};

struct LoadResult {
  std::vector<Scenario> scenarios;
  std::size_t warnings = 0;
  std::vector<std::string> diagnostics;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".schema.json");
}

inline void check_sidecar(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) return;
  std::ifstream in(side);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("unreadable sidecar " + side.string());
  if (j.value("format", "") != kFormatName || j.value("schema_version", -1) != kSchemaVersion) {
    throw Error("sidecar " + side.string() + " declares an unsupported format or version");
  }
}

inline LoadResult load_scenarios(const std::filesystem::path& path,
                                 std::optional<std::size_t> limit = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scenario file " + path.string());
  check_sidecar(path);
  ScenarioReader reader(in);
  LoadResult out;
  while (!limit || out.scenarios.size() < *limit) {
    auto s = reader.next();
    if (!s) break;
    out.scenarios.push_back(std::move(*s));
  }
  out.warnings = reader.warnings();
  out.diagnostics = reader.diagnostics();
  return out;
}

inline void write_sidecar(const std::filesystem::path& path) {
  std::ofstream out(sidecar_path(path));
  out << nlohmann::json{{"format", kFormatName}, {"schema_version", kSchemaVersion}}.dump(2)
      << "\n";
  if (!out) throw Error("cannot write sidecar for " + path.string());
}

inline void save_scenarios(const std::filesystem::path& path, std::span<const Scenario> scenarios) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const Scenario& s : scenarios) {
    const std::string rec = encode_record(s);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  out.close();
  if (!out) throw Error("write failed for " + path.string());
  write_sidecar(path);
}

// JSON interchange form consumed by `midsim convert`:
// {
//   "id": str, "horizon": 91, "dt": 0.1,
//   "objects": [{"id": int, "class": "vehicle", "length": m, "width": m,
//                "is_sdc": bool, "is_controllable": bool,
//                "states": [[x, y, yaw, vx, vy, valid], ...]}],
//   "roadgraph": [{"type": "lane_center", "lane_id": int, "speed_limit": m/s,
//                  "points": [[x, y], ...], "dirs": [[dx, dy], ...] (optional)}],
//   "traffic_lights": [{"lane_id": int, "stop": [x, y], "states": ["red", ...]}],
//   "sdc_paths": [{"on_route": bool, "waypoints": [[x, y], ...]}]   (optional)
// }
// Missing "dirs" are derived from the polyline; missing "sdc_paths" are
// reconstructed from the lane graph and the SDC's first and last valid states.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  auto need = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
    if (!obj.contains(key)) throw Error(std::string("missing key: ") + key);
    return obj.at(key);
  };
  try {
    Scenario s;
    s.id = need(j, "id").get<std::string>();
    s.horizon = j.value("horizon", kHorizon);
    s.dt = j.value("dt", kDt);
    for (const auto& jo : need(j, "objects")) {
      SceneObject o;
      o.meta.id = need(jo, "id").get<std::int32_t>();
      const auto cls = object_class_from_string(jo.value("class", std::string("vehicle")));
      if (!cls) throw Error("unknown object class in object " + std::to_string(o.meta.id));
      o.meta.object_class = *cls;
      o.meta.length = need(jo, "length").get<double>();
      o.meta.width = need(jo, "width").get<double>();
      o.meta.is_sdc = jo.value("is_sdc", false);
      o.meta.is_controllable = jo.value("is_controllable", false);
      for (const auto& row : need(jo, "states")) {
        if (!row.is_array() || row.size() != 6) throw Error("state rows need 6 entries");
        o.states.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                            row[3].get<double>(), row[4].get<double>(),
                            row[5].is_boolean() ? row[5].get<bool>() : row[5].get<double>() != 0.0});
      }
      s.objects.push_back(std::move(o));
    }
    for (const auto& jr : j.value("roadgraph", nlohmann::json::array())) {
      const auto type = roadgraph_type_from_string(need(jr, "type").get<std::string>());
      if (!type) throw Error("unknown roadgraph type");
      const std::int32_t lane = jr.value("lane_id", 0);
      const double limit = jr.value("speed_limit", 0.0);
      std::vector<Vec2> pts;
      for (const auto& p : need(jr, "points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      std::vector<Vec2> dirs;
      if (jr.contains("dirs")) {
        for (const auto& d : jr.at("dirs")) dirs.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
        if (dirs.size() != pts.size()) throw Error("dirs and points differ in length");
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          Vec2 d{};
          if (pts.size() >= 2) {
            d = normalized(i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1]);
          }
          dirs.push_back(d);
        }
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        s.roadgraph.push_back({pts[i].x, pts[i].y, dirs[i].x, dirs[i].y, *type, lane, limit});
      }
    }
    for (const auto& jl : j.value("traffic_lights", nlohmann::json::array())) {
      TrafficLightTrack l;
      l.lane_id = need(jl, "lane_id").get<std::int32_t>();
      const auto& stop = need(jl, "stop");
      l.stop_x = stop.at(0).get<double>();
      l.stop_y = stop.at(1).get<double>();
      for (const auto& st : need(jl, "states")) {
        const auto v = light_state_from_string(st.get<std::string>());
        if (!v) throw Error("unknown light state");
        l.states.push_back(*v);
      }
      s.traffic_lights.push_back(std::move(l));
    }
    if (j.contains("sdc_paths")) {
      for (const auto& jp : j.at("sdc_paths")) {
        std::vector<Vec2> w;
        for (const auto& p : need(jp, "waypoints")) w.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        s.sdc_paths.push_back(make_sdc_path(std::move(w), jp.value("on_route", false)));
      }
    } else if (const int sdc = s.sdc_index(); sdc >= 0) {
      s.sdc_paths = reconstruct_paths_for(build_lane_graph(s.roadgraph), s.objects[sdc]);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed scenario json: ") + e.what());
  }
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json j{{"id", s.id}, {"horizon", s.horizon}, {"dt", s.dt}};
  json objects = json::array();
  for (const SceneObject& o : s.objects) {
    json states = json::array();
    for (const ObjectState& st : o.states) {
      states.push_back({st.x, st.y, st.yaw, st.vx, st.vy, st.valid});
    }
    objects.push_back({{"id", o.meta.id}, {"class", to_string(o.meta.object_class)},
                       {"length", o.meta.length}, {"width", o.meta.width},
                       {"is_sdc", o.meta.is_sdc}, {"is_controllable", o.meta.is_controllable},
                       {"states", std::move(states)}});
  }
  j["objects"] = std::move(objects);
  json roadgraph = json::array();
  for (std::size_t i = 0; i < s.roadgraph.size();) {
    const RoadgraphPoint& head = s.roadgraph[i];
    json pts = json::array();
    json dirs = json::array();
    std::size_t k = i;
    for (; k < s.roadgraph.size() && s.roadgraph[k].type == head.type &&
           s.roadgraph[k].lane_id == head.lane_id && s.roadgraph[k].speed_limit == head.speed_limit;
         ++k) {
      pts.push_back({s.roadgraph[k].x, s.roadgraph[k].y});
      dirs.push_back({s.roadgraph[k].dir_x, s.roadgraph[k].dir_y});
    }
    roadgraph.push_back({{"type", to_string(head.type)}, {"lane_id", head.lane_id},
                         {"speed_limit", head.speed_limit}, {"points", std::move(pts)},
                         {"dirs", std::move(dirs)}});
    i = k;
  }
  j["roadgraph"] = std::move(roadgraph);
  json lights = json::array();
  for (const TrafficLightTrack& l : s.traffic_lights) {
    json states = json::array();
    for (LightState st : l.states) states.push_back(to_string(st));
    lights.push_back({{"lane_id", l.lane_id}, {"stop", {l.stop_x, l.stop_y}}, {"states", std::move(states)}});
  }
  j["traffic_lights"] = std::move(lights);
  json paths = json::array();
  for (const SdcPath& p : s.sdc_paths) {
    json w = json::array();
    for (const Vec2& v : p.waypoints) w.push_back({v.x, v.y});
    paths.push_back({{"on_route", p.on_route}, {"waypoints", std::move(w)}});
  }
  j["sdc_paths"] = std::move(paths);
  return j;
}

struct ConvertResult {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

// Imports every *.json file of `dir` (sorted by name) into one container.
inline ConvertResult convert_json_dir(const std::filesystem::path& dir,
                                      const std::filesystem::path& out) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ConvertResult res;
  std::vector<Scenario> good;
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    try {
      if (j.is_discarded()) throw Error("invalid json");
      Scenario s = scenario_from_json(j);
      if (auto problems = validate_scenario(s); !problems.empty()) throw Error(problems.front());
      good.push_back(std::move(s));
    } catch (const Error& e) {
      ++res.skipped;
      res.diagnostics.push_back(f.filename().string() + ": " + e.what());
    }
  }
  save_scenarios(out, good);
  res.written = good.size();
  return res;
}

}  // namespace midsim
