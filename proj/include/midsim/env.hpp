#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "midsim/dynamics.hpp"
#include "midsim/metrics.hpp"
#include "midsim/observation.hpp"
#include "midsim/planners.hpp"
#include "midsim/scenario.hpp"
#include "midsim/scene_context.hpp"
#include "midsim/simulator_state.hpp"

namespace midsim {

enum class RewardVariant : std::uint8_t { kSafety = 0, kNavigation, kBehavior };

inline std::string_view to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::kSafety: return "safety";
    case RewardVariant::kNavigation: return "navigation";
    case RewardVariant::kBehavior: return "behavior";
  }
  return "safety";
}

inline std::optional<RewardVariant> reward_variant_from_string(std::string_view s) {
  for (auto v : {RewardVariant::kSafety, RewardVariant::kNavigation, RewardVariant::kBehavior}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct RewardConfig {
  RewardVariant variant = RewardVariant::kNavigation;
  double w_offroute = 0.2;
  double w_progress = 0.2;
  double w_comfort = 0.2;
  double w_overspeed = 0.1;
  bool operator==(const RewardConfig&) const = default;
};

inline constexpr double kProgressEpsilon = 1e-3;  // m of arclength gain

// Indicators available after one transition.
struct StepSignals {
  bool collision = false;
  bool offroad = false;
  bool red_light = false;
  bool offroute = false;
  bool progress_increased = false;
  bool comfortable = true;
  bool overspeed = false;
  bool operator==(const StepSignals&) const = default;
};

inline double safety_reward(const StepSignals& s) {
  return -static_cast<double>(s.collision) - static_cast<double>(s.offroad) -
         static_cast<double>(s.red_light);
}

inline double navigation_reward(const StepSignals& s, const RewardConfig& c) {
  return safety_reward(s) - c.w_offroute * static_cast<double>(s.offroute) +
         c.w_progress * static_cast<double>(s.progress_increased);
}

inline double behavior_reward(const StepSignals& s, const RewardConfig& c) {
  return navigation_reward(s, c) + c.w_comfort * static_cast<double>(s.comfortable) -
         c.w_overspeed * static_cast<double>(s.overspeed);
}

inline double compute_reward(const StepSignals& s, const RewardConfig& c) {
  switch (c.variant) {
    case RewardVariant::kSafety: return safety_reward(s);
    case RewardVariant::kNavigation: return navigation_reward(s, c);
    case RewardVariant::kBehavior: return behavior_reward(s, c);
  }
  return 0.0;
}

// Per-step quantities the full metric catalog accumulates. Computed every
// step only when EnvConfig::stepwise_metrics is set.
struct StepMetrics {
  double ttc = kInf;
  double speed_violation = 0.0;
  bool wrong_way = false;
  bool multiple_lanes = false;
  bool wrongway_path = false;
};

struct EnvConfig {
  RewardConfig reward{};
  bool terminate_on_collision = true;
  bool terminate_on_offroad = true;
  bool terminate_on_red_light = true;
  bool stepwise_metrics = false;
  std::optional<ObservationConfig> observation;
  bool operator==(const EnvConfig&) const = default;
};

struct StepInfo {
  StepSignals signals;
  std::optional<TerminationCause> termination;
  std::optional<StepMetrics> metrics;
};

struct EnvState {
  std::shared_ptr<const SceneContext> scene;
  SimulatorState sim;
  int ego = 0;
  int step = kInitSteps;
  bool done = false;
  double cumulative_reward = 0.0;
  TerminationCause cause = TerminationCause::kHorizon;
  std::vector<Action> ego_actions;
  std::shared_ptr<const Policy> background;
  std::vector<int> background_agents;
  std::optional<Observation> observation;
  std::uint64_t rng_seed = 0;

  bool operator==(const EnvState& o) const {
    return scene == o.scene && sim == o.sim && ego == o.ego && step == o.step &&
           done == o.done && cumulative_reward == o.cumulative_reward && cause == o.cause &&
           ego_actions == o.ego_actions && background == o.background &&
           background_agents == o.background_agents && observation == o.observation &&
           rng_seed == o.rng_seed;
  }
};

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed of one episode; independent of batch layout.
inline std::uint64_t episode_seed(std::uint64_t global_seed, std::string_view scenario_id) {
  return splitmix64(fnv1a(scenario_id) ^ splitmix64(global_seed));
}

// Object ids to indices; throws on an unknown id.
inline std::vector<int> indices_of(const Scenario& s, const std::set<std::int32_t>& ids) {
  std::vector<int> out;
  for (std::int32_t id : ids) {
    const int idx = s.index_of(id);
    if (idx < 0) throw Error("unknown object id " + std::to_string(id));
    out.push_back(idx);
  }
  return out;
}

namespace detail {

inline EpisodeView live_view(const EnvState& env) {
  EpisodeView v;
  v.scene = env.scene.get();
  v.ego = env.ego;
  v.objects.reserve(env.sim.num_objects());
  for (std::size_t j = 0; j < env.sim.num_objects(); ++j) {
    v.objects.push_back(env.sim.trajectory(static_cast<int>(j)));
  }
  v.first = kInitSteps;
  v.last = env.sim.timestep();
  v.dt = env.sim.scenario().dt;
  v.route = env.scene->route_for(env.ego);
  v.expert = env.sim.scenario().objects[static_cast<std::size_t>(env.ego)].states;
  return v;
}

inline void observe(EnvState& env, const EnvConfig& cfg) {
  if (!cfg.observation) return;
  if (!env.observation) env.observation.emplace();
  extract_observation_into(*env.observation, env.sim, *env.scene, env.ego, *cfg.observation,
                           env.rng_seed + static_cast<std::uint64_t>(env.step));
}

}  // namespace detail

// Positions the episode at the end of the replayed history. `controlled` are
// object ids simulated with the bicycle model; listed `background_ids` are
// driven by `background`, the rest take actions passed to step().
inline EnvState reset(std::shared_ptr<const SceneContext> scene,
                      const std::set<std::int32_t>& controlled, const EnvConfig& cfg = {},
                      std::shared_ptr<const Policy> background = nullptr,
                      const std::set<std::int32_t>& background_ids = {},
                      std::uint64_t rng_seed = 0) {
  const Scenario& s = scene->scenario();
  const int ego = s.sdc_index();
  if (ego < 0) throw Error("scenario has no sdc");
  std::set<std::int32_t> all = controlled;
  all.insert(background_ids.begin(), background_ids.end());
  const std::vector<int> idx = indices_of(s, all);
  EnvState env;
  env.sim = SimulatorState(scene->scenario_ptr(), kInitSteps, idx);
  env.scene = std::move(scene);
  env.ego = ego;
  env.step = kInitSteps;
  env.background = std::move(background);
  env.background_agents = indices_of(s, background_ids);
  env.rng_seed = rng_seed;
  detail::observe(env, cfg);
  return env;
}

inline StepSignals step_signals(const EnvState& env, const EpisodeView& v, int prev, int cur) {
  StepSignals sig;
  sig.collision = collision_partner_at(v, cur) >= 0;
  sig.offroad = offroad_at(v, cur);
  const AgentRoute* route = v.route;
  const ObjectState& a = v.at(env.ego, prev);
  const ObjectState& b = v.at(env.ego, cur);
  if (route != nullptr && a.valid && b.valid) {
    const double s0 = route_progress_at(route->line, a.position());
    const double s1 = route_progress_at(route->line, b.position());
    sig.red_light = red_light_crossed(v, s0, s1, cur);
    sig.progress_increased = s1 - s0 > kProgressEpsilon;
    sig.offroute = route->line.project(b.position()).distance > limits::kWrongwayDistance;
  }
  const int from = std::max(v.first, cur - 3);
  const auto& ego_traj = v.objects[static_cast<std::size_t>(env.ego)];
  sig.comfortable = comfortable(
      ego_traj.subspan(static_cast<std::size_t>(from), static_cast<std::size_t>(cur - from + 1)),
      v.dt);
  if (b.valid) {
    const double limit = env.scene->speed_limit_at(b.position());
    sig.overspeed = limit > 0.0 && b.speed() > limit;
  }
  return sig;
}

inline StepMetrics step_metrics(const EnvState& env, const EpisodeView& v, int cur) {
  StepMetrics m;
  const ObjectState& e = v.at(env.ego, cur);
  if (!e.valid) return m;
  m.ttc = time_to_collision_at(v, cur);
  const double limit = env.scene->speed_limit_at(e.position());
  if (limit > 0.0) m.speed_violation = std::max(0.0, e.speed() - limit);
  m.wrong_way = heading_opposes_lane(*env.scene, e);
  m.multiple_lanes = env.scene->occupies_multiple_lanes(v.box(env.ego, cur));
  if (v.route != nullptr) {
    m.wrongway_path = distance_to_paths(v.route->all_paths, e.position()) >
                      limits::kWrongwayDistance;
  }
  return m;
}

// Advances the episode one step in place. Actions may only name controlled
// objects that no background policy drives; missing ones coast.
inline double step(EnvState& env, const std::map<std::int32_t, Action>& actions,
                   const EnvConfig& cfg = {}, StepInfo* info = nullptr) {
  if (env.done) throw Error("step called on a finished episode");
  const Scenario& s = env.sim.scenario();
  const int t = env.sim.timestep();
  std::vector<Action> plan(s.objects.size());
  for (const auto& [id, a] : actions) {
    const int idx = s.index_of(id);
    if (idx < 0 || !env.sim.is_controlled(idx)) {
      throw Error("action for uncontrolled object " + std::to_string(id));
    }
    if (std::find(env.background_agents.begin(), env.background_agents.end(), idx) !=
        env.background_agents.end()) {
      throw Error("action for background-driven object " + std::to_string(id));
    }
    plan[static_cast<std::size_t>(idx)] = a;
  }
  if (env.background) {
    for (int idx : env.background_agents) {
      plan[static_cast<std::size_t>(idx)] = env.background->act(env.sim, *env.scene, idx);
    }
  }
  for (int idx : env.sim.controlled()) {
    const ObjectState& cur = env.sim.state(idx, t);
    if (!cur.valid) continue;
    const EgoKinematicState next =
        step_bicycle(kinematic_from(cur), plan[static_cast<std::size_t>(idx)], s.dt);
    env.sim.set_state(idx, t + 1, object_state_from(next));
  }
  env.ego_actions.push_back(plan[static_cast<std::size_t>(env.ego)]);
  env.sim.set_timestep(t + 1);
  env.step = t + 1;

  const EpisodeView v = detail::live_view(env);
  const StepSignals sig = step_signals(env, v, t, t + 1);
  const double reward = compute_reward(sig, cfg.reward);
  env.cumulative_reward += reward;

  std::optional<TerminationCause> cause;
  if (cfg.terminate_on_collision && sig.collision) {
    cause = TerminationCause::kCollision;
  } else if (cfg.terminate_on_offroad && sig.offroad) {
    cause = TerminationCause::kOffroad;
  } else if (cfg.terminate_on_red_light && sig.red_light) {
    cause = TerminationCause::kRedLight;
  } else if (t + 1 >= s.horizon - 1) {
    cause = TerminationCause::kHorizon;
  }
  if (cause) {
    env.done = true;
    env.cause = *cause;
  }
  std::optional<StepMetrics> metrics;
  if (cfg.stepwise_metrics) metrics = step_metrics(env, v, t + 1);
  detail::observe(env, cfg);
  if (info != nullptr) *info = {sig, cause, metrics};
  return reward;
}

inline Rollout to_rollout(const EnvState& env) {
  Rollout r;
  r.scenario = env.sim.scenario_ptr();
  r.ego_index = env.ego;
  r.trajectories.reserve(env.sim.num_objects());
  for (std::size_t j = 0; j < env.sim.num_objects(); ++j) {
    const auto traj = env.sim.trajectory(static_cast<int>(j));
    r.trajectories.emplace_back(traj.begin(), traj.end());
  }
  r.actions = env.ego_actions;
  r.start_step = kInitSteps;
  r.termination_step = env.sim.timestep();
  r.termination_cause = env.cause;
  return r;
}

// ---- evaluation setups ----

// Vehicles valid at every step whose logged footprint never leaves the road.
inline std::set<std::int32_t> select_controllable(const Scenario& s,
                                                  const SceneContext& scene) {
  std::set<std::int32_t> out;
  for (const SceneObject& o : s.objects) {
    if (o.meta.object_class != ObjectClass::kVehicle) continue;
    bool ok = static_cast<int>(o.states.size()) == s.horizon;
    for (std::size_t t = 0; ok && t < o.states.size(); ++t) {
      ok = o.states[t].valid && !scene.box_offroad(o.box_at(static_cast<int>(t)));
    }
    if (ok) out.insert(o.meta.id);
  }
  return out;
}

inline std::set<std::int32_t> select_controllable(const Scenario& s) {
  const auto scene = SceneContext::build(std::make_shared<const Scenario>(s));
  return select_controllable(s, *scene);
}

// Gaussian offsets on the ego's logged positions over the history steps;
// headings follow the perturbed displacement.
inline Scenario perturb_initial(const Scenario& s, double sigma, std::uint64_t seed) {
  Scenario out = s;
  if (!(sigma > 0.0)) return out;
  const int ego = out.sdc_index();
  if (ego < 0) return out;
  auto& st = out.objects[static_cast<std::size_t>(ego)].states;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  const int n = std::min<int>(kInitSteps, static_cast<int>(st.size()));
  for (int t = 0; t < n; ++t) {
    const double dx = gauss(rng);
    const double dy = gauss(rng);
    if (!st[static_cast<std::size_t>(t)].valid) continue;
    st[static_cast<std::size_t>(t)].x += dx;
    st[static_cast<std::size_t>(t)].y += dy;
  }
  for (int t = 0; t < n && t + 1 < static_cast<int>(st.size()); ++t) {
    ObjectState& a = st[static_cast<std::size_t>(t)];
    const ObjectState& b = st[static_cast<std::size_t>(t + 1)];
    if (!a.valid || !b.valid) continue;
    const Vec2 d = b.position() - a.position();
    if (norm(d) > 1e-9) a.yaw = std::atan2(d.y, d.x);
  }
  return out;
}

enum class SetupKind : std::uint8_t { kNonReactive = 0, kReactive, kPerturbed };

inline std::string_view to_string(SetupKind k) {
  switch (k) {
    case SetupKind::kNonReactive: return "nonreactive";
    case SetupKind::kReactive: return "reactive";
    case SetupKind::kPerturbed: return "perturbed";
  }
  return "nonreactive";
}

struct EvalSetup {
  SetupKind kind = SetupKind::kNonReactive;
  std::shared_ptr<const Policy> background;  // reactive only
  double sigma = 0.0;                        // perturbed only
};

struct EpisodeTask {
  std::shared_ptr<const Scenario> scenario;
  std::shared_ptr<const SceneContext> scene;  // optional; built when null
};

// Builds the episode for one scenario under an evaluation setup: applies the
// perturbation, picks background agents and resets with the episode seed.
inline EnvState start_episode(std::shared_ptr<const Scenario> scenario, const EnvConfig& cfg = {},
                              const EvalSetup& setup = {}, std::uint64_t global_seed = 0,
                              std::shared_ptr<const SceneContext> scene = nullptr) {
  const std::uint64_t seed = episode_seed(global_seed, scenario->id);
  if (setup.kind == SetupKind::kPerturbed) {
    scenario = std::make_shared<const Scenario>(perturb_initial(*scenario, setup.sigma, seed));
    scene = nullptr;
  }
  const int ego = scenario->sdc_index();
  if (ego < 0) throw Error("scenario has no sdc");
  const std::int32_t ego_id = scenario->objects[static_cast<std::size_t>(ego)].meta.id;
  if (!scene || scene->scenario_ptr() != scenario) scene = SceneContext::build(scenario);
  std::set<std::int32_t> background_ids;
  if (setup.kind == SetupKind::kReactive && setup.background) {
    background_ids = select_controllable(*scenario, *scene);
    background_ids.erase(ego_id);
    if (!background_ids.empty()) scene = SceneContext::build(scenario, indices_of(*scenario, background_ids));
  }
  // Agents without a reconstructed route keep replaying their log.
  std::set<std::int32_t> driven;
  for (std::int32_t id : background_ids) {
    if (scene->route_for(scenario->index_of(id)) != nullptr) driven.insert(id);
  }
  return reset(scene, {ego_id}, cfg, setup.background, driven, seed);
}

inline std::int32_t ego_id(const EnvState& env) {
  return env.sim.meta(env.ego).id;
}

// One step of the ego policy.
inline double advance(EnvState& env, const Policy& policy, const EnvConfig& cfg = {},
                      StepInfo* info = nullptr) {
  const Action a = policy.act(env.sim, *env.scene, env.ego);
  return step(env, {{ego_id(env), a}}, cfg, info);
}

inline Rollout run_episode(std::shared_ptr<const Scenario> scenario, const Policy& policy,
                           const EnvConfig& cfg = {}, const EvalSetup& setup = {},
                           std::uint64_t global_seed = 0,
                           std::shared_ptr<const SceneContext> scene = nullptr) {
  EnvState env = start_episode(std::move(scenario), cfg, setup, global_seed, std::move(scene));
  while (!env.done) advance(env, policy, cfg);
  return to_rollout(env);
}

}  // namespace midsim
