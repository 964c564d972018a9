#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "midsim/batch.hpp"
#include "midsim/env.hpp"
#include "midsim/observation.hpp"
#include "midsim/planners.hpp"
#include "midsim/scenario_io.hpp"
#include "midsim/scoring.hpp"
#include "midsim/synthetic.hpp"

namespace midsim::cli {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "MIDSIM_OUTPUT_DIR";
inline constexpr std::string_view kDefaultOutputDir = "midsim_out";

// A problem with the run configuration. `key` is the dotted path of the
// offending entry, empty for syntax errors.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct PlannerSpec {
  std::string name = "expert";  // expert | idm | pdm
  IdmParams idm{};
  bool use_lane_limit = true;
  double lookahead = PurePursuit{}.lookahead;
  PdmConfig pdm{};
};

struct SetupSpec {
  SetupKind kind = SetupKind::kNonReactive;
  PlannerSpec background{"idm"};  // reactive only
  double sigma = 0.0;             // perturbed only
};

struct SyntheticSource {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::vector<std::filesystem::path> scenario_files;
  std::optional<SyntheticSource> synthetic;
  std::optional<std::size_t> limit;
  std::vector<PlannerSpec> planners{PlannerSpec{}};
  std::vector<SetupSpec> setups{SetupSpec{}};
  EnvConfig env{};
  std::size_t batch_size = 1;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output_dir;
};

namespace detail {

inline std::string join_key(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

inline void check_keys(const YAML::Node& n, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
  if (!n.IsMap()) throw ConfigError(where, "'" + where + "' must be a mapping");
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError(join_key(where, k), "unknown key '" + join_key(where, k) + "'");
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(key, "'" + key + "' must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key, "invalid value for '" + key + "': " + n.Scalar());
  }
}

inline std::uint64_t unsigned_scalar(const YAML::Node& n, const std::string& key) {
  const auto v = scalar<long long>(n, key);
  if (v < 0) throw ConfigError(key, "'" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

inline std::vector<double> double_list(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() == 0) {
    throw ConfigError(key, "'" + key + "' must be a non-empty list of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(scalar<double>(n[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <class T>
void read_if(const YAML::Node& n, const char* name, const std::string& where, T& out) {
  if (const YAML::Node v = n[name]) out = scalar<T>(v, join_key(where, name));
}

inline void require_positive(double v, const std::string& key) {
  if (!(v > 0.0)) throw ConfigError(key, "'" + key + "' must be > 0");
}

inline IdmParams parse_idm(const YAML::Node& n, const std::string& where, IdmParams p,
                           bool* lane_limit, double* lookahead) {
  if (lane_limit != nullptr) {
    check_keys(n, where, {"v_desired", "s0", "headway", "a_max", "b_comfort", "delta",
                          "use_lane_limit", "lookahead"});
    read_if(n, "use_lane_limit", where, *lane_limit);
    read_if(n, "lookahead", where, *lookahead);
    require_positive(*lookahead, join_key(where, "lookahead"));
  } else {
    check_keys(n, where, {"v_desired", "s0", "headway", "a_max", "b_comfort", "delta"});
  }
  read_if(n, "v_desired", where, p.v_desired);
  read_if(n, "s0", where, p.s0);
  read_if(n, "headway", where, p.headway);
  read_if(n, "a_max", where, p.a_max);
  read_if(n, "b_comfort", where, p.b_comfort);
  read_if(n, "delta", where, p.delta);
  require_positive(p.v_desired, join_key(where, "v_desired"));
  require_positive(p.a_max, join_key(where, "a_max"));
  require_positive(p.b_comfort, join_key(where, "b_comfort"));
  require_positive(p.delta, join_key(where, "delta"));
  if (p.s0 < 0.0) throw ConfigError(join_key(where, "s0"), "'" + join_key(where, "s0") + "' must be >= 0");
  if (p.headway < 0.0) {
    throw ConfigError(join_key(where, "headway"), "'" + join_key(where, "headway") + "' must be >= 0");
  }
  return p;
}

inline PdmConfig parse_pdm(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"lateral_offsets", "speed_fractions", "horizon", "ttc_brake", "idm",
                        "lookahead"});
  PdmConfig c;
  if (n["lateral_offsets"]) {
    c.lateral_offsets = double_list(n["lateral_offsets"], join_key(where, "lateral_offsets"));
  }
  if (n["speed_fractions"]) {
    c.speed_fractions = double_list(n["speed_fractions"], join_key(where, "speed_fractions"));
    for (double f : c.speed_fractions) {
      if (!(f > 0.0 && f <= 1.0)) {
        throw ConfigError(join_key(where, "speed_fractions"),
                          "'" + join_key(where, "speed_fractions") + "' entries must be in (0, 1]");
      }
    }
  }
  read_if(n, "horizon", where, c.horizon);
  read_if(n, "ttc_brake", where, c.ttc_brake);
  read_if(n, "lookahead", where, c.tracker.lookahead);
  require_positive(c.horizon, join_key(where, "horizon"));
  require_positive(c.ttc_brake, join_key(where, "ttc_brake"));
  require_positive(c.tracker.lookahead, join_key(where, "lookahead"));
  if (n["idm"]) c.idm = parse_idm(n["idm"], join_key(where, "idm"), c.idm, nullptr, nullptr);
  return c;
}

inline PlannerSpec parse_planner(const YAML::Node& n, const std::string& where) {
  PlannerSpec p;
  if (n.IsScalar()) {
    p.name = n.Scalar();
  } else {
    check_keys(n, where, {"name", "idm", "pdm"});
    if (!n["name"]) throw ConfigError(join_key(where, "name"), "missing key '" + join_key(where, "name") + "'");
    p.name = scalar<std::string>(n["name"], join_key(where, "name"));
    if (n["idm"]) {
      p.idm = parse_idm(n["idm"], join_key(where, "idm"), p.idm, &p.use_lane_limit, &p.lookahead);
    }
    if (n["pdm"]) p.pdm = parse_pdm(n["pdm"], join_key(where, "pdm"));
  }
  if (p.name != "expert" && p.name != "idm" && p.name != "pdm") {
    const std::string key = n.IsScalar() ? where : join_key(where, "name");
    throw ConfigError(key, "'" + key + "' must be one of expert, idm, pdm (got '" + p.name + "')");
  }
  return p;
}

inline SetupSpec parse_setup(const YAML::Node& n, const std::string& where) {
  SetupSpec s;
  std::string kind;
  if (n.IsScalar()) {
    kind = n.Scalar();
  } else {
    check_keys(n, where, {"kind", "planner", "sigma"});
    if (!n["kind"]) throw ConfigError(join_key(where, "kind"), "missing key '" + join_key(where, "kind") + "'");
    kind = scalar<std::string>(n["kind"], join_key(where, "kind"));
  }
  const std::string kind_key = n.IsScalar() ? where : join_key(where, "kind");
  if (kind == "nonreactive") {
    s.kind = SetupKind::kNonReactive;
  } else if (kind == "reactive") {
    s.kind = SetupKind::kReactive;
  } else if (kind == "perturbed") {
    s.kind = SetupKind::kPerturbed;
  } else {
    throw ConfigError(kind_key, "'" + kind_key +
                                    "' must be one of nonreactive, reactive, perturbed (got '" +
                                    kind + "')");
  }
  if (!n.IsMap()) {
    if (s.kind == SetupKind::kPerturbed) {
      throw ConfigError(join_key(where, "sigma"), "missing key '" + join_key(where, "sigma") + "'");
    }
    return s;
  }
  if (n["planner"]) {
    if (s.kind != SetupKind::kReactive) {
      throw ConfigError(join_key(where, "planner"),
                        "'" + join_key(where, "planner") + "' only applies to reactive setups");
    }
    s.background = parse_planner(n["planner"], join_key(where, "planner"));
  }
  if (n["sigma"]) {
    if (s.kind != SetupKind::kPerturbed) {
      throw ConfigError(join_key(where, "sigma"),
                        "'" + join_key(where, "sigma") + "' only applies to perturbed setups");
    }
    s.sigma = scalar<double>(n["sigma"], join_key(where, "sigma"));
    if (!(s.sigma >= 0.0)) {
      throw ConfigError(join_key(where, "sigma"), "'" + join_key(where, "sigma") + "' must be >= 0");
    }
  } else if (s.kind == SetupKind::kPerturbed) {
    throw ConfigError(join_key(where, "sigma"), "missing key '" + join_key(where, "sigma") + "'");
  }
  return s;
}

inline ObservationConfig parse_observation(const YAML::Node& n) {
  const std::string w = "observation";
  check_keys(n, w, {"history_steps", "num_objects", "roadgraph_top_k", "roadgraph_interval",
                    "box_front", "box_back", "box_side", "path_points", "path_spacing",
                    "traffic_lights", "noise_std", "dropout_prob"});
  ObservationConfig c;
  read_if(n, "history_steps", w, c.history_steps);
  read_if(n, "num_objects", w, c.num_objects);
  read_if(n, "roadgraph_top_k", w, c.roadgraph_top_k);
  read_if(n, "roadgraph_interval", w, c.roadgraph_interval);
  read_if(n, "box_front", w, c.box_front);
  read_if(n, "box_back", w, c.box_back);
  read_if(n, "box_side", w, c.box_side);
  read_if(n, "path_points", w, c.path_points);
  read_if(n, "path_spacing", w, c.path_spacing);
  read_if(n, "traffic_lights", w, c.traffic_lights);
  read_if(n, "noise_std", w, c.noise_std);
  read_if(n, "dropout_prob", w, c.dropout_prob);
  if (const auto p = c.problems(); !p.empty()) {
    // Each problem starts with the field name.
    const std::string field = p.front().substr(0, p.front().find(' '));
    throw ConfigError(join_key(w, field), "observation." + p.front());
  }
  return c;
}

inline RewardConfig parse_reward(const YAML::Node& n) {
  RewardConfig r;
  const std::string w = "reward";
  std::string variant;
  if (n.IsScalar()) {
    variant = n.Scalar();
  } else {
    check_keys(n, w, {"variant", "w_offroute", "w_progress", "w_comfort", "w_overspeed"});
    if (n["variant"]) variant = scalar<std::string>(n["variant"], "reward.variant");
    read_if(n, "w_offroute", w, r.w_offroute);
    read_if(n, "w_progress", w, r.w_progress);
    read_if(n, "w_comfort", w, r.w_comfort);
    read_if(n, "w_overspeed", w, r.w_overspeed);
  }
  if (!variant.empty()) {
    const auto v = reward_variant_from_string(variant);
    const std::string key = n.IsScalar() ? w : "reward.variant";
    if (!v) {
      throw ConfigError(key, "'" + key + "' must be one of safety, navigation, behavior (got '" +
                                 variant + "')");
    }
    r.variant = *v;
  }
  return r;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

// Relative paths are resolved against `base_dir` (the config file's folder).
inline RunConfig parse_run_config(const YAML::Node& root, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  RunConfig c;
  if (!root || root.IsNull()) throw ConfigError("", "empty config");
  check_keys(root, "", {"scenarios", "synthetic", "limit", "planner", "planners", "setup",
                        "setups", "observation", "reward", "terminate", "stepwise_metrics",
                        "batch_size", "workers", "seed", "output_dir"});

  if (const YAML::Node s = root["scenarios"]) {
    auto add = [&](const YAML::Node& item, const std::string& key) {
      const auto p = resolve(base_dir, scalar<std::string>(item, key));
      if (!std::filesystem::is_regular_file(p)) {
        throw ConfigError(key, "'" + key + "' refers to a missing file: " + p.string());
      }
      c.scenario_files.push_back(p);
    };
    if (s.IsSequence()) {
      for (std::size_t i = 0; i < s.size(); ++i) add(s[i], "scenarios[" + std::to_string(i) + "]");
    } else {
      add(s, "scenarios");
    }
  }
  if (const YAML::Node s = root["synthetic"]) {
    check_keys(s, "synthetic", {"count", "seed"});
    if (!s["count"]) throw ConfigError("synthetic.count", "missing key 'synthetic.count'");
    SyntheticSource src;
    src.count = unsigned_scalar(s["count"], "synthetic.count");
    if (s["seed"]) src.seed = unsigned_scalar(s["seed"], "synthetic.seed");
    c.synthetic = src;
  }
  if (c.scenario_files.empty() && !c.synthetic) {
    throw ConfigError("scenarios", "config needs 'scenarios' or 'synthetic'");
  }
  if (root["limit"]) c.limit = unsigned_scalar(root["limit"], "limit");

  if (root["planner"] && root["planners"]) {
    throw ConfigError("planners", "give either 'planner' or 'planners', not both");
  }
  if (const YAML::Node p = root["planner"]) c.planners = {parse_planner(p, "planner")};
  if (const YAML::Node p = root["planners"]) {
    if (!p.IsSequence() || p.size() == 0) throw ConfigError("planners", "'planners' must be a non-empty list");
    c.planners.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      c.planners.push_back(parse_planner(p[i], "planners[" + std::to_string(i) + "]"));
    }
  }
  if (root["setup"] && root["setups"]) {
    throw ConfigError("setups", "give either 'setup' or 'setups', not both");
  }
  if (const YAML::Node s = root["setup"]) c.setups = {parse_setup(s, "setup")};
  if (const YAML::Node s = root["setups"]) {
    if (!s.IsSequence() || s.size() == 0) throw ConfigError("setups", "'setups' must be a non-empty list");
    c.setups.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      c.setups.push_back(parse_setup(s[i], "setups[" + std::to_string(i) + "]"));
    }
  }

  if (const YAML::Node o = root["observation"]) c.env.observation = parse_observation(o);
  if (const YAML::Node r = root["reward"]) c.env.reward = parse_reward(r);
  if (const YAML::Node t = root["terminate"]) {
    check_keys(t, "terminate", {"collision", "offroad", "red_light"});
    read_if(t, "collision", "terminate", c.env.terminate_on_collision);
    read_if(t, "offroad", "terminate", c.env.terminate_on_offroad);
    read_if(t, "red_light", "terminate", c.env.terminate_on_red_light);
  }
  read_if(root, "stepwise_metrics", "", c.env.stepwise_metrics);

  if (root["batch_size"]) {
    c.batch_size = unsigned_scalar(root["batch_size"], "batch_size");
    if (c.batch_size < 1) throw ConfigError("batch_size", "'batch_size' must be >= 1");
  }
  if (root["workers"]) c.workers = unsigned_scalar(root["workers"], "workers");
  if (root["seed"]) c.seed = unsigned_scalar(root["seed"], "seed");
  if (root["output_dir"]) {
    c.output_dir = resolve(base_dir, scalar<std::string>(root["output_dir"], "output_dir"));
  }
  return c;
}

inline RunConfig parse_run_config_text(const std::string& text,
                                       const std::filesystem::path& base_dir = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  return parse_run_config(root, base_dir);
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error("config file not found: " + path.string());
  return parse_run_config_text(read_text(path), path.parent_path());
}

// Flag beats config, config beats the environment variable.
inline std::filesystem::path output_dir_for(const RunConfig& c,
                                            const std::optional<std::filesystem::path>& flag = {}) {
  if (flag) return *flag;
  if (c.output_dir) return *c.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return std::filesystem::path(kDefaultOutputDir);
}

inline std::shared_ptr<const Policy> make_policy(const PlannerSpec& p) {
  if (p.name == "expert") return std::make_shared<ExpertPolicy>();
  if (p.name == "idm") {
    PurePursuit tracker;
    tracker.lookahead = p.lookahead;
    return std::make_shared<IdmPolicy>(p.idm, p.use_lane_limit, tracker);
  }
  if (p.name == "pdm") return std::make_shared<PdmClosedPolicy>(p.pdm);
  throw Error("unknown planner " + p.name);
}

inline EvalSetup make_setup(const SetupSpec& s) {
  EvalSetup out;
  out.kind = s.kind;
  out.sigma = s.sigma;
  if (s.kind == SetupKind::kReactive) out.background = make_policy(s.background);
  return out;
}

inline std::string setup_label(const SetupSpec& s) {
  std::string out(to_string(s.kind));
  if (s.kind == SetupKind::kReactive) out += "(" + s.background.name + ")";
  if (s.kind == SetupKind::kPerturbed) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "(%g)", s.sigma);
    out += buf;
  }
  return out;
}

// ---- serialization ----

inline nlohmann::json to_json(const IdmParams& p) {
  return {{"v_desired", p.v_desired}, {"s0", p.s0},           {"headway", p.headway},
          {"a_max", p.a_max},         {"b_comfort", p.b_comfort}, {"delta", p.delta}};
}

inline nlohmann::json to_json(const PlannerSpec& p) {
  nlohmann::json j{{"name", p.name}};
  if (p.name == "idm") {
    j["idm"] = to_json(p.idm);
    j["idm"]["use_lane_limit"] = p.use_lane_limit;
    j["idm"]["lookahead"] = p.lookahead;
  } else if (p.name == "pdm") {
    j["pdm"] = {{"lateral_offsets", p.pdm.lateral_offsets},
                {"speed_fractions", p.pdm.speed_fractions},
                {"horizon", p.pdm.horizon},
                {"ttc_brake", p.pdm.ttc_brake},
                {"lookahead", p.pdm.tracker.lookahead},
                {"idm", to_json(p.pdm.idm)}};
  }
  return j;
}

inline nlohmann::json to_json(const SetupSpec& s) {
  nlohmann::json j{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == SetupKind::kReactive) j["planner"] = to_json(s.background);
  if (s.kind == SetupKind::kPerturbed) j["sigma"] = s.sigma;
  return j;
}

inline nlohmann::json to_json(const ObservationConfig& o) {
  return {{"history_steps", o.history_steps},   {"num_objects", o.num_objects},
          {"roadgraph_top_k", o.roadgraph_top_k}, {"roadgraph_interval", o.roadgraph_interval},
          {"box_front", o.box_front},           {"box_back", o.box_back},
          {"box_side", o.box_side},             {"path_points", o.path_points},
          {"path_spacing", o.path_spacing},     {"traffic_lights", o.traffic_lights},
          {"noise_std", o.noise_std},           {"dropout_prob", o.dropout_prob}};
}

// The resolved configuration; its compact dump is what the config hash covers.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& p : c.scenario_files) j["scenarios"].push_back(p.generic_string());
  if (c.synthetic) j["synthetic"] = {{"count", c.synthetic->count}, {"seed", c.synthetic->seed}};
  if (c.limit) j["limit"] = *c.limit;
  j["planners"] = nlohmann::json::array();
  for (const auto& p : c.planners) j["planners"].push_back(to_json(p));
  j["setups"] = nlohmann::json::array();
  for (const auto& s : c.setups) j["setups"].push_back(to_json(s));
  if (c.env.observation) j["observation"] = to_json(*c.env.observation);
  j["reward"] = {{"variant", std::string(to_string(c.env.reward.variant))},
                 {"w_offroute", c.env.reward.w_offroute},
                 {"w_progress", c.env.reward.w_progress},
                 {"w_comfort", c.env.reward.w_comfort},
                 {"w_overspeed", c.env.reward.w_overspeed}};
  j["terminate"] = {{"collision", c.env.terminate_on_collision},
                    {"offroad", c.env.terminate_on_offroad},
                    {"red_light", c.env.terminate_on_red_light}};
  j["stepwise_metrics"] = c.env.stepwise_metrics;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  return j;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

inline nlohmann::json to_json(const MetricValues& m) {
  return {{"collision", m.collision},
          {"offroad", m.offroad},
          {"red_light", m.red_light},
          {"wrongway", m.wrongway},
          {"offroute", m.offroute},
          {"progress_ratio", m.progress_ratio},
          {"progress_along_route", m.progress_along_route},
          {"making_progress", m.making_progress},
          {"at_fault_collision", m.at_fault_collision},
          {"ttc_within_bound", m.ttc_within_bound},
          {"speed_compliance", m.speed_compliance},
          {"direction_compliance", m.direction_compliance},
          {"multiple_lanes", m.multiple_lanes},
          {"comfort", m.comfort},
          {"offroad_evaluable", m.offroad_evaluable}};
}

// ---- evaluation ----

struct Cell {
  std::string planner;
  std::string setup;
  std::vector<EpisodeRecord> records;
  BenchmarkTable table;
};

struct Evaluation {
  std::vector<Cell> cells;
};

inline std::vector<std::shared_ptr<const Scenario>> load_run_scenarios(
    const RunConfig& c, std::vector<std::string>* diagnostics = nullptr) {
  std::vector<std::shared_ptr<const Scenario>> out;
  auto room = [&]() { return !c.limit || out.size() < *c.limit; };
  for (const auto& f : c.scenario_files) {
    if (!room()) break;
    std::optional<std::size_t> left;
    if (c.limit) left = *c.limit - out.size();
    LoadResult r = load_scenarios(f, left);
    if (diagnostics != nullptr) {
      for (auto& d : r.diagnostics) diagnostics->push_back(f.filename().string() + ": " + d);
    }
    for (auto& s : r.scenarios) out.push_back(std::make_shared<const Scenario>(std::move(s)));
  }
  if (c.synthetic && room()) {
    std::size_t n = c.synthetic->count;
    if (c.limit) n = std::min(n, *c.limit - out.size());
    for (auto& s : synthetic_set(n, c.synthetic->seed)) {
      out.push_back(std::make_shared<const Scenario>(std::move(s)));
    }
  }
  return out;
}

inline std::vector<EpisodeRecord> score_rollouts(std::span<const Rollout> rollouts,
                                                 std::span<const EpisodeTask> tasks) {
  std::vector<EpisodeRecord> out;
  out.reserve(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const Rollout& r = rollouts[i];
    if (r.errored) {
      out.push_back(make_record(r, {}));
      continue;
    }
    try {
      std::shared_ptr<const SceneContext> scene = tasks[i].scene;
      if (!scene || scene->scenario_ptr() != r.scenario) scene = SceneContext::build(r.scenario);
      out.push_back(make_record(r, compute_metrics(r, *scene)));
    } catch (const std::exception& e) {
      Rollout failed = r;
      failed.errored = true;
      failed.error = std::string("metrics: ") + e.what();
      out.push_back(make_record(failed, {}));
    }
  }
  return out;
}

inline Evaluation evaluate(const RunConfig& c,
                           std::span<const std::shared_ptr<const Scenario>> scenarios) {
  std::vector<EpisodeTask> tasks;
  tasks.reserve(scenarios.size());
  for (const auto& s : scenarios) {
    std::shared_ptr<const SceneContext> scene;
    try {
      scene = SceneContext::build(s);
    } catch (const std::exception&) {
      // start_episode reports the failure for this episode
    }
    tasks.push_back({s, scene});
  }
  Evaluation ev;
  for (const auto& planner : c.planners) {
    const auto policy = make_policy(planner);
    for (const auto& setup : c.setups) {
      BatchOptions opt;
      opt.batch_size = c.batch_size;
      opt.workers = c.workers;
      opt.env = c.env;
      opt.setup = make_setup(setup);
      opt.seed = c.seed;
      const auto rollouts = run_batch(tasks, *policy, opt);
      Cell cell;
      cell.planner = planner.name;
      cell.setup = setup_label(setup);
      cell.records = score_rollouts(rollouts, tasks);
      cell.table = aggregate_report(cell.records);
      ev.cells.push_back(std::move(cell));
    }
  }
  return ev;
}

// ---- report writers ----

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_report(const Evaluation& ev) {
  std::string out = "planner,setup";
  for (auto col : BenchmarkTable::kColumns) out += "," + std::string(col);
  out += "\n";
  for (const Cell& cell : ev.cells) {
    out += cell.planner + "," + cell.setup;
    for (double v : cell.table.values()) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json json_report(const Evaluation& ev) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const Cell& cell : ev.cells) {
    nlohmann::ordered_json row;
    row["planner"] = cell.planner;
    row["setup"] = cell.setup;
    const auto values = cell.table.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      row[std::string(BenchmarkTable::kColumns[i])] = values[i];
    }
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json out;
  out["columns"] = BenchmarkTable::kColumns;
  out["rows"] = std::move(rows);
  return out;
}

inline std::string episodes_jsonl(const Evaluation& ev) {
  std::string out;
  for (const Cell& cell : ev.cells) {
    for (const EpisodeRecord& r : cell.records) {
      nlohmann::ordered_json j;
      j["planner"] = cell.planner;
      j["setup"] = cell.setup;
      j["scenario_id"] = r.scenario_id;
      j["errored"] = r.errored;
      if (r.errored) j["error"] = r.error;
      j["termination"] = std::string(to_string(r.termination));
      j["termination_step"] = r.termination_step;
      j["score"] = r.score;
      j["nuplan_score"] = r.nuplan_score;
      if (!r.errored) j["metrics"] = nlohmann::ordered_json::parse(to_json(r.metrics).dump());
      out += j.dump() + "\n";
    }
  }
  return out;
}

inline nlohmann::json manifest(const RunConfig& c, std::size_t scenarios) {
  return {{"tool", "midsim"},
          {"version", std::string(kVersion)},
          {"scenario_schema_version", kSchemaVersion},
          {"compiler", __VERSION__},
          {"yaml_cpp", "system"},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"seed", c.seed},
          {"config_hash", config_hash(c)},
          {"config", to_json(c)},
          {"scenarios", scenarios}};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error("write failed for " + p.string());
}

inline void write_reports(const std::filesystem::path& dir, const RunConfig& c,
                          const Evaluation& ev, std::size_t scenarios) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "report.csv", csv_report(ev));
  write_file(dir / "report.json", json_report(ev).dump(2) + "\n");
  write_file(dir / "episodes.jsonl", episodes_jsonl(ev));
  write_file(dir / "manifest.json", manifest(c, scenarios).dump(2) + "\n");
}

}  // namespace midsim::cli
