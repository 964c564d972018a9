#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "midsim/metrics.hpp"
#include "midsim/scenario.hpp"

namespace midsim {

enum class ScoreVariant : std::uint8_t { kNuplan = 0, kVmax };

inline std::string_view to_string(ScoreVariant v) {
  return v == ScoreVariant::kNuplan ? "nuplan" : "vmax";
}

// Names double as keys of the map form of episode_score.
enum class ScoreTerm : std::uint8_t {
  kNoAtFaultCollision = 0,
  kNoOffroad,
  kNoRedLight,
  kMakingProgress,
  kDirectionCompliance,
  kTtcWithinBound,
  kProgressAlongRoute,
  kSpeedCompliance,
  kMultipleLanes,
  kComfort,
};

inline std::string_view metric_key(ScoreTerm t) {
  switch (t) {
    case ScoreTerm::kNoAtFaultCollision: return "at_fault_collision";
    case ScoreTerm::kNoOffroad: return "offroad";
    case ScoreTerm::kNoRedLight: return "red_light";
    case ScoreTerm::kMakingProgress: return "making_progress";
    case ScoreTerm::kDirectionCompliance: return "direction_compliance";
    case ScoreTerm::kTtcWithinBound: return "ttc_within_bound";
    case ScoreTerm::kProgressAlongRoute: return "progress_along_route";
    case ScoreTerm::kSpeedCompliance: return "speed_compliance";
    case ScoreTerm::kMultipleLanes: return "multiple_lanes";
    case ScoreTerm::kComfort: return "comfort";
  }
  return "";
}

// Flags enter as their "no violation" complement.
inline bool is_negated(ScoreTerm t) {
  return t == ScoreTerm::kNoAtFaultCollision || t == ScoreTerm::kNoOffroad ||
         t == ScoreTerm::kNoRedLight;
}

inline bool vmax_only(ScoreTerm t) {
  return t == ScoreTerm::kNoRedLight || t == ScoreTerm::kMultipleLanes;
}

struct ScoreWeights {
  std::vector<ScoreTerm> multipliers{ScoreTerm::kNoAtFaultCollision, ScoreTerm::kNoOffroad,
                                     ScoreTerm::kNoRedLight, ScoreTerm::kMakingProgress,
                                     ScoreTerm::kDirectionCompliance};
  std::vector<std::pair<ScoreTerm, double>> averaged{
      {ScoreTerm::kTtcWithinBound, 5.0},
      {ScoreTerm::kProgressAlongRoute, 5.0},
      {ScoreTerm::kSpeedCompliance, 4.0},
      {ScoreTerm::kMultipleLanes, 3.0},
      {ScoreTerm::kComfort, 2.0},
  };
};

inline double metric_value(const MetricValues& m, ScoreTerm t) {
  switch (t) {
    case ScoreTerm::kNoAtFaultCollision: return m.at_fault_collision ? 1.0 : 0.0;
    case ScoreTerm::kNoOffroad: return m.offroad ? 1.0 : 0.0;
    case ScoreTerm::kNoRedLight: return m.red_light ? 1.0 : 0.0;
    case ScoreTerm::kMakingProgress: return m.making_progress ? 1.0 : 0.0;
    case ScoreTerm::kDirectionCompliance: return m.direction_compliance;
    case ScoreTerm::kTtcWithinBound: return m.ttc_within_bound;
    case ScoreTerm::kProgressAlongRoute: return m.progress_along_route;
    case ScoreTerm::kSpeedCompliance: return m.speed_compliance;
    case ScoreTerm::kMultipleLanes: return m.multiple_lanes;
    case ScoreTerm::kComfort: return m.comfort ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace detail {

template <typename Lookup>
double weighted_score(const ScoreWeights& w, ScoreVariant variant, Lookup&& value) {
  const auto included = [&](ScoreTerm t) {
    return variant == ScoreVariant::kVmax || !vmax_only(t);
  };
  double product = 1.0;
  for (ScoreTerm t : w.multipliers) {
    if (!included(t)) continue;
    const double v = value(t);
    product *= is_negated(t) ? 1.0 - v : v;
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& [t, weight] : w.averaged) {
    if (!included(t)) continue;
    num += weight * value(t);
    den += weight;
  }
  return den > 0.0 ? product * num / den : product;
}

}  // namespace detail

inline double episode_score(const MetricValues& m, ScoreVariant variant = ScoreVariant::kVmax,
                            const ScoreWeights& w = {}) {
  return detail::weighted_score(w, variant, [&](ScoreTerm t) { return metric_value(m, t); });
}

// Map form for externally computed metrics; a referenced key that is absent
// raises an Error naming it.
inline double episode_score(const std::map<std::string, double>& m,
                            ScoreVariant variant = ScoreVariant::kVmax,
                            const ScoreWeights& w = {}) {
  return detail::weighted_score(w, variant, [&](ScoreTerm t) {
    auto it = m.find(std::string(metric_key(t)));
    if (it == m.end()) throw Error("missing metric: " + std::string(metric_key(t)));
    return it->second;
  });
}

struct EpisodeRecord {
  std::string scenario_id;
  MetricValues metrics;
  double score = 0.0;  // V-Max variant
  double nuplan_score = 0.0;
  TerminationCause termination = TerminationCause::kHorizon;
  int termination_step = 0;
  bool errored = false;
  std::string error;
};

inline bool accurate(const MetricValues& m) {
  return !m.collision && !m.offroad && !m.red_light;
}
inline bool accurate_at_fault_only(const MetricValues& m) {
  return !m.at_fault_collision && !m.offroad && !m.red_light;
}

// Rates and accuracies are percentages; progress is the mean progress ratio
// in percent (it can exceed 100); scores stay in [0, 1].
struct BenchmarkTable {
  std::size_t episodes = 0;
  std::size_t errored = 0;
  double collision_rate = 0.0;
  double offroad = 0.0;
  double red_light_violation = 0.0;
  double progress = 0.0;
  double at_fault_collisions = 0.0;
  double other_collisions = 0.0;
  double making_progress = 0.0;
  double driving_direction_compliance = 0.0;
  double ttc_within_bound = 0.0;
  double progress_along_route_ratio = 0.0;
  double speed_limit_compliance = 0.0;
  double multiple_lanes_score = 0.0;
  double comfort = 0.0;
  double accuracy = 0.0;
  double accuracy_only_at_fault = 0.0;
  double v_max_score = 0.0;
  double nuplan_score = 0.0;

  // Column order of the CSV/JSON outputs.
  static constexpr std::array<std::string_view, 19> kColumns{
      "episodes",
      "errored",
      "collision_rate",
      "offroad",
      "red_light_violation",
      "progress",
      "at_fault_collisions",
      "other_collisions",
      "making_progress",
      "driving_direction_compliance",
      "ttc_within_bound",
      "progress_along_route_ratio",
      "speed_limit_compliance",
      "multiple_lanes_score",
      "comfort",
      "accuracy",
      "accuracy_only_at_fault",
      "v_max_score",
      "nuplan_score",
  };

  std::array<double, kColumns.size()> values() const {
    return {static_cast<double>(episodes),
            static_cast<double>(errored),
            collision_rate,
            offroad,
            red_light_violation,
            progress,
            at_fault_collisions,
            other_collisions,
            making_progress,
            driving_direction_compliance,
            ttc_within_bound,
            progress_along_route_ratio,
            speed_limit_compliance,
            multiple_lanes_score,
            comfort,
            accuracy,
            accuracy_only_at_fault,
            v_max_score,
            nuplan_score};
  }
};

// Errored episodes count against accuracy and score zero; they are excluded
// from the per-metric means.
inline BenchmarkTable aggregate_report(std::span<const EpisodeRecord> episodes) {
  BenchmarkTable t;
  t.episodes = episodes.size();
  if (episodes.empty()) return t;
  std::size_t ok = 0;
  double acc = 0.0;
  double acc_fault = 0.0;
  double score = 0.0;
  double nuplan = 0.0;
  for (const EpisodeRecord& e : episodes) {
    if (e.errored) {
      ++t.errored;
      continue;
    }
    ++ok;
    const MetricValues& m = e.metrics;
    t.collision_rate += m.collision;
    t.offroad += m.offroad;
    t.red_light_violation += m.red_light;
    t.progress += m.progress_ratio;
    t.at_fault_collisions += m.at_fault_collision;
    t.other_collisions += m.collision && !m.at_fault_collision;
    t.making_progress += m.making_progress;
    t.driving_direction_compliance += m.direction_compliance;
    t.ttc_within_bound += m.ttc_within_bound;
    t.progress_along_route_ratio += m.progress_along_route;
    t.speed_limit_compliance += m.speed_compliance;
    t.multiple_lanes_score += m.multiple_lanes;
    t.comfort += m.comfort;
    acc += accurate(m);
    acc_fault += accurate_at_fault_only(m);
    score += e.score;
    nuplan += e.nuplan_score;
  }
  const double n_all = static_cast<double>(episodes.size());
  const double pct = ok > 0 ? 100.0 / static_cast<double>(ok) : 0.0;
  for (double* f : {&t.collision_rate, &t.offroad, &t.red_light_violation, &t.progress,
                    &t.at_fault_collisions, &t.other_collisions, &t.making_progress,
                    &t.driving_direction_compliance, &t.ttc_within_bound,
                    &t.progress_along_route_ratio, &t.speed_limit_compliance,
                    &t.multiple_lanes_score, &t.comfort}) {
    *f *= pct;
  }
  t.accuracy = 100.0 * acc / n_all;
  t.accuracy_only_at_fault = 100.0 * acc_fault / n_all;
  t.v_max_score = score / n_all;
  t.nuplan_score = nuplan / n_all;
  return t;
}

inline EpisodeRecord make_record(const Rollout& r, const MetricValues& m) {
  EpisodeRecord e;
  e.scenario_id = r.scenario ? r.scenario->id : std::string();
  e.termination = r.termination_cause;
  e.termination_step = r.termination_step;
  e.errored = r.errored;
  e.error = r.error;
  if (!r.errored) {
    e.metrics = m;
    e.score = episode_score(m, ScoreVariant::kVmax);
    e.nuplan_score = episode_score(m, ScoreVariant::kNuplan);
  }
  return e;
}

}  // namespace midsim
