#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "midsim/metrics.hpp"
#include "midsim/synthetic.hpp"

using namespace midsim;
using namespace fixtures;

namespace {

// Road with edges at y = +/-2 around a single eastbound lane.
SceneBuilder narrow_road() {
  SceneBuilder b;
  b.lane(1, {0, 0}, {300, 0}, 13.4).edge(100, {0, -2}, {300, -2}).edge(101, {300, 2}, {0, 2});
  return b;
}

std::vector<Vec2> perimeter_samples(const OrientedBox& box, int n) {
  const auto c = box.corners();
  std::vector<Vec2> out;
  const double per = 2 * (box.length + box.width);
  for (int i = 0; i < n; ++i) {
    double s = per * i / n;
    for (int e = 0; e < 4; ++e) {
      const double len = distance(c[e], c[(e + 1) % 4]);
      if (s <= len) {
        out.push_back(c[e] + (c[(e + 1) % 4] - c[e]) * (s / len));
        break;
      }
      s -= len;
    }
  }
  return out;
}

bool inside(const OrientedBox& box, Vec2 p) {
  const Vec2 l = Frame(box.center, box.yaw).to_local(p);
  return std::abs(l.x) < 0.5 * box.length && std::abs(l.y) < 0.5 * box.width;
}

// Overlap by boundary sampling: convex boxes intersect iff a boundary point
// of one lies inside the other.
bool sampled_overlap(const OrientedBox& a, const OrientedBox& b, int n) {
  for (const Vec2& p : perimeter_samples(a, n)) {
    if (inside(b, p)) return true;
  }
  for (const Vec2& p : perimeter_samples(b, n)) {
    if (inside(a, p)) return true;
  }
  return false;
}

}  // namespace

TEST(Collision, SeparatedBoxesNeverCollide) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const double a = yaw(rng);
    const double b = yaw(rng);
    const double dir = yaw(rng);
    SceneBuilder s = two_way_road();
    s.object(0, parked(50, 0, a), true, 4.0, 2.0)
        .object(1, parked(50 + 10 * std::cos(dir), 10 * std::sin(dir), b), false, 4.0, 2.0);
    EXPECT_FALSE(metrics_of(replay(s.build())).collision);
  }
}

TEST(Collision, IdenticalPoseAtStepZero) {
  SceneBuilder s = two_way_road();
  s.object(0, parked(50, 0), true).object(1, parked(50, 0));
  Rollout r = replay(s.build());
  r.start_step = 0;
  const auto scene = SceneContext::build(r.scenario);
  const CollisionInfo c = overlap_collision(make_view(r, *scene));
  EXPECT_TRUE(c.collided);
  EXPECT_EQ(c.step, 0);
  EXPECT_EQ(c.partner, 1);
}

TEST(Collision, HeadOnClosingAtTwoMetersPerStep) {
  SceneBuilder s = two_way_road();
  s.object(0, cruise(50, 0, 10), true, 4.0, 2.0).object(1, cruise(74, 0, 10, kPi), false, 4.0, 2.0);
  Rollout r = replay(s.build());
  r.start_step = 0;
  const auto scene = SceneContext::build(r.scenario);
  const CollisionInfo c = overlap_collision(make_view(r, *scene));
  ASSERT_TRUE(c.collided);
  EXPECT_NEAR(c.step, 10, 1);
}

TEST(Collision, MatchesSampledPolygonOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int hits = 0;
  for (int trial = 0; trial < 150; ++trial) {
    SceneBuilder s = two_way_road();
    s.object(0, cruise(50, 0, 5 + 5 * u(rng), 0.2 * u(rng)), true);
    const int others = 1 + trial % 2;
    for (int j = 1; j <= others; ++j) {
      const double x0 = 60 + 40 * u(rng);
      const double y0 = 1.75 + 2.0 * u(rng);
      const double v = 8 * u(rng);
      const double yaw = 0.5 * u(rng);
      s.object(j, cruise(x0, y0, v, yaw));
    }
    const Rollout r = replay(s.build());
    const auto scene = SceneContext::build(r.scenario);
    const EpisodeView v = make_view(r, *scene);
    const CollisionInfo c = overlap_collision(v);

    CollisionInfo oracle;
    for (int k = v.first; k <= v.last && !oracle.collided; ++k) {
      for (int j = 1; j < v.num_objects(); ++j) {
        bool hit = sampled_overlap(v.box(0, k), v.box(j, k), 1000);
        // Grazing contact below the sampling pitch: resolve with a finer pass.
        if (hit != boxes_overlap(v.box(0, k), v.box(j, k))) {
          hit = sampled_overlap(v.box(0, k), v.box(j, k), 200000);
        }
        if (hit) {
          oracle = {true, k, j};
          break;
        }
      }
    }
    EXPECT_EQ(c.collided, oracle.collided) << trial;
    EXPECT_EQ(c.step, oracle.step) << trial;
    EXPECT_EQ(c.partner, oracle.partner) << trial;
    hits += c.collided;
  }
  EXPECT_GT(hits, 10);
  EXPECT_LT(hits, 140);
}

TEST(Offroad, CenteredInLane) {
  SceneBuilder b = narrow_road();
  b.object(0, cruise(10, 0, 10), true, 4.0, 2.0);
  const MetricValues m = metrics_of(replay(b.build()));
  EXPECT_FALSE(m.offroad);
  EXPECT_TRUE(m.offroad_evaluable);
}

TEST(Offroad, CenterBeyondEdge) {
  SceneBuilder b = narrow_road();
  b.object(0, cruise(10, 0, 10), true, 4.0, 2.0);
  const Rollout r = with_ego(b.build(), cruise(10, -5, 10));
  EXPECT_TRUE(metrics_of(r).offroad);
}

TEST(Offroad, CornerOverhang) {
  SceneBuilder b = narrow_road();
  b.object(0, cruise(10, 0, 10), true, 4.0, 2.0);
  const auto sc = b.build();
  // Box edge at y = -1.2 - 1 = -2.2: 0.2 m past the edge at -2.
  EXPECT_TRUE(metrics_of(with_ego(sc, cruise(10, -1.2, 10))).offroad);
  EXPECT_FALSE(metrics_of(with_ego(sc, cruise(10, -0.95, 10))).offroad);
  // Yawed: only the front right corner crosses.
  const double yaw = -0.1;
  const Vec2 corner = Frame({0, -0.85}, yaw).to_world({2.0, -1.0});
  ASSERT_LT(corner.y, -2.0);
  EXPECT_TRUE(metrics_of(with_ego(sc, [&](int t) {
                return ObjectState{10.0 + t, -0.85, yaw, 10.0, 0.0, true};
              })).offroad);
}

TEST(Offroad, NoEdgesIsNotEvaluable) {
  SceneBuilder b;
  b.lane(1, {0, 0}, {300, 0});
  b.object(0, cruise(10, 30, 10), true);
  b.lane(2, {0, 30}, {300, 30});
  const MetricValues m = metrics_of(replay(b.build()));
  EXPECT_FALSE(m.offroad);
  EXPECT_FALSE(m.offroad_evaluable);
}

namespace {

std::shared_ptr<const Scenario> light_scene(const std::function<LightState(int)>& light) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 8), true).light(1, {50, 0}, light);
  return b.build("light");
}

}  // namespace

TEST(RedLight, StopsBeforeLine) {
  const auto sc = light_scene([](int) { return LightState::kRed; });
  const Rollout r = with_ego(sc, [](int t) {
    const double x = std::min(10.0 + 0.8 * t, 48.0);
    return ObjectState{x, 0.0, 0.0, x < 48.0 ? 8.0 : 0.0, 0.0, true};
  });
  EXPECT_FALSE(metrics_of(r).red_light);
}

TEST(RedLight, CrossesDuringRed) {
  const auto sc = light_scene([](int) { return LightState::kRed; });
  EXPECT_TRUE(metrics_of(replay(sc)).red_light);
}

TEST(RedLight, CrossesDuringGreenThenRed) {
  // The ego passes the stop line at step 50.
  const auto sc = light_scene([](int t) { return t < 55 ? LightState::kGreen : LightState::kRed; });
  EXPECT_FALSE(metrics_of(replay(sc)).red_light);
  const auto late = light_scene([](int t) { return t < 50 ? LightState::kGreen : LightState::kRed; });
  EXPECT_TRUE(metrics_of(replay(late)).red_light);
  const auto early = light_scene([](int t) { return t < 51 ? LightState::kRed : LightState::kGreen; });
  EXPECT_TRUE(metrics_of(replay(early)).red_light);
  const auto cleared = light_scene([](int t) { return t < 50 ? LightState::kRed : LightState::kGreen; });
  EXPECT_FALSE(metrics_of(replay(cleared)).red_light);
}

TEST(RouteMetrics, ReplayIsFullProgress) {
  SyntheticSpec spec;
  const auto sc = std::make_shared<const Scenario>(generate_synthetic(spec, 3));
  const MetricValues m = metrics_of(replay(sc));
  EXPECT_NEAR(m.progress_ratio, 1.0, 1e-3);
  EXPECT_FALSE(m.wrongway);
  EXPECT_FALSE(m.offroute);
  EXPECT_TRUE(m.making_progress);
}

TEST(RouteMetrics, StationaryEgo) {
  SyntheticSpec spec;
  spec.oncoming = 0;
  const auto sc = std::make_shared<const Scenario>(generate_synthetic(spec, 3));
  const ObjectState hold = sc->objects[0].states[kInitSteps];
  const MetricValues m = metrics_of(with_ego(sc, [&](int) { return hold; }));
  EXPECT_EQ(m.progress_ratio, 0.0);
  EXPECT_FALSE(m.making_progress);
}

TEST(RouteMetrics, OtherForkIsOffrouteNotWrongway) {
  SceneBuilder b;
  b.lane(1, {0, 0}, {50, 0}).lane(2, {50, 0}, {100, 20}).lane(3, {50, 0}, {100, -20});
  const Vec2 dir2 = normalized(Vec2{50, 20});
  const Vec2 dir3 = normalized(Vec2{50, -20});
  auto along = [](Vec2 dir) {
    return [=](int t) {
      const double s = 1.0 * t;
      const Vec2 p = s <= 40 ? Vec2{10 + s, 0} : Vec2{50, 0} + dir * (s - 40);
      const double yaw = s <= 40 ? 0.0 : std::atan2(dir.y, dir.x);
      return ObjectState{p.x, p.y, yaw, 10 * std::cos(yaw), 10 * std::sin(yaw), true};
    };
  };
  b.object(0, along(dir2), true);
  const auto sc = b.build();
  ASSERT_EQ(sc->sdc_paths.size(), 2u);
  const Rollout r = with_ego(sc, along(dir3));
  const MetricValues m = metrics_of(r);
  EXPECT_TRUE(m.offroute);
  EXPECT_FALSE(m.wrongway);
}

TEST(RouteMetrics, ExpertGainFloor) {
  SceneBuilder b = two_way_road();
  b.object(0, parked(50, 0), true);
  const auto sc = b.build();
  const MetricValues m = metrics_of(with_ego(sc, cruise(50 - 0.1 * kInitSteps * kDt, 0, 0.1)));
  // Ego gains 0.8 m against a floored expert gain of 0.1 m.
  EXPECT_NEAR(m.progress_ratio, 8.0, 1e-9);
  EXPECT_EQ(m.progress_along_route, 1.0);
}

TEST(AtFault, DeckClassifiesEveryBranch) {
  for (const FaultCase& c : at_fault_deck()) {
    const MetricValues m = metrics_of(c.rollout);
    EXPECT_TRUE(m.collision) << c.name;
    EXPECT_EQ(m.at_fault_collision, c.at_fault) << c.name;
  }
}

TEST(AtFault, ImpliesCollision) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int collisions = 0;
  for (int trial = 0; trial < 300; ++trial) {
    SceneBuilder s = two_way_road();
    s.object(0, cruise(40, 1.5 * u(rng), 6 + 4 * u(rng), 0.05 * u(rng)), true);
    for (int j = 1; j <= 3; ++j) {
      s.object(j, cruise(60 + 40 * u(rng), 1.75 + 2 * u(rng), 6 * (1 + u(rng)), kPi * (u(rng) > 0.6)));
    }
    const MetricValues m = metrics_of(replay(s.build()));
    if (m.at_fault_collision) {
      EXPECT_TRUE(m.collision);
    }
    collisions += m.collision;
  }
  EXPECT_GT(collisions, 30);
}

TEST(Ttc, FreeRoad) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true);
  EXPECT_EQ(metrics_of(replay(b.build())).ttc_within_bound, 1.0);
}

TEST(Ttc, StoppedLeadFourMetersAhead) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true).object(1, parked(10 + 1.0 * kInitSteps + 4.5 + 4.0, 0));
  const Rollout r = replay(b.build());
  const auto scene = SceneContext::build(r.scenario);
  const EpisodeView v = make_view(r, *scene);
  EXPECT_NEAR(time_to_collision_at(v, kInitSteps), 0.4, 1e-9);
  EXPECT_EQ(ttc_within_bound(v), 0.0);
}

TEST(Ttc, ConstantGapSameSpeed) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true).object(1, cruise(34.5, 0, 10));
  EXPECT_EQ(metrics_of(replay(b.build())).ttc_within_bound, 1.0);
}

TEST(Ttc, BoundaryAndCone) {
  // Closing at 10 m/s from a 9.5 m bumper gap: 0.95 s scores 1.
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true).object(1, parked(10 + 1.0 * kInitSteps + 4.5 + 9.5, 0));
  Rollout r = replay(b.build());
  r.termination_step = kInitSteps;
  const auto scene = SceneContext::build(r.scenario);
  EXPECT_NEAR(time_to_collision_at(make_view(r, *scene), kInitSteps), 0.95, 1e-9);
  // Agents behind or beside are not "ahead".
  SceneBuilder c = two_way_road();
  c.object(0, cruise(40, 0, 5), true).object(1, cruise(20, 0, 15)).object(2, cruise(46, 3.5, 5, kPi));
  const Rollout rc = replay(c.build());
  const auto sc = SceneContext::build(rc.scenario);
  EXPECT_EQ(time_to_collision_at(make_view(rc, *sc), kInitSteps), kInf);
}

TEST(SpeedCompliance, AnalyticCases) {
  const double thr = limits::kSpeedViolationThreshold;
  EXPECT_EQ(metrics_of(replay(constant_speed_scene(9.0))).speed_compliance, 1.0);
  EXPECT_NEAR(metrics_of(replay(constant_speed_scene(10.0 + thr / 2))).speed_compliance, 0.5, 1e-12);
  EXPECT_EQ(metrics_of(replay(constant_speed_scene(10.0 + thr))).speed_compliance, 0.0);
}

TEST(SpeedCompliance, UnknownLimitContributesNothing) {
  SceneBuilder b;
  b.lane(1, {0, 0}, {400, 0}, 0.0);
  b.object(0, cruise(10, 0, 30), true);
  EXPECT_EQ(metrics_of(replay(b.build())).speed_compliance, 1.0);
}

TEST(SpeedCompliance, MonotoneInOverspeed) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> speeds(kHorizon);
    for (double& v : speeds) v = 6.0 + 8.0 * u(rng);
    SceneBuilder b = two_way_road(1000.0, 10.0);
    b.object(0, cruise(10, 0, 10), true);
    const auto sc = b.build();
    double prev = 2.0;
    for (double extra : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      const Rollout r = with_ego(sc, [&](int t) {
        return ObjectState{10.0 + t, 0.0, 0.0, speeds[static_cast<std::size_t>(t)] + extra, 0.0, true};
      });
      const double s = metrics_of(r).speed_compliance;
      EXPECT_LE(s, prev);
      prev = s;
    }
  }
}

TEST(DirectionCompliance, ThresholdTable) {
  EXPECT_EQ(three_level_score(0.0, 2.0, 6.0), 1.0);
  EXPECT_EQ(three_level_score(2.0, 2.0, 6.0), 1.0);
  EXPECT_EQ(three_level_score(2.0001, 2.0, 6.0), 0.5);
  EXPECT_EQ(three_level_score(6.0, 2.0, 6.0), 0.5);
  EXPECT_EQ(three_level_score(6.0001, 2.0, 6.0), 0.0);
}

TEST(DirectionCompliance, ConstructedRollouts) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true);
  EXPECT_EQ(metrics_of(replay(b.build())).direction_compliance, 1.0);
  for (const auto& [dist, score] : {std::pair{1.0, 1.0}, std::pair{4.0, 0.5}, std::pair{10.0, 0.0}}) {
    const Rollout r = wrong_way_rollout(dist);
    const auto scene = SceneContext::build(r.scenario);
    EXPECT_NEAR(wrong_way_distance(make_view(r, *scene)), dist, 1e-9);
    EXPECT_EQ(metrics_of(r).direction_compliance, score) << dist;
  }
}

TEST(MultipleLanes, ThresholdTable) {
  EXPECT_EQ(three_level_score(3.4, 3.4, 5.7), 1.0);
  EXPECT_EQ(three_level_score(3.5, 3.4, 5.7), 0.5);
  EXPECT_EQ(three_level_score(5.7, 3.4, 5.7), 0.5);
  EXPECT_EQ(three_level_score(5.8, 3.4, 5.7), 0.0);
}

TEST(MultipleLanes, ConstructedRollouts) {
  for (const auto& [steps, score] : {std::pair{0, 1.0}, std::pair{20, 1.0}, std::pair{40, 0.5},
                                     std::pair{60, 0.0}}) {
    const Rollout r = straddle_rollout(steps);
    const auto scene = SceneContext::build(r.scenario);
    EXPECT_NEAR(multiple_lanes_time(make_view(r, *scene)), steps * kDt, 1e-9);
    EXPECT_EQ(metrics_of(r).multiple_lanes, score) << steps;
  }
}

TEST(Comfort, ConstantVelocity) {
  std::vector<ObjectState> s;
  for (int t = 0; t < 50; ++t) s.push_back(cruise(0, 0, 10)(t));
  EXPECT_TRUE(comfortable(s, kDt));
}

TEST(Comfort, AccelStepIsJerk) {
  // Acceleration steps 0 -> 2 m/s^2 (inside the accel bound): jerk 20 m/s^3.
  std::vector<ObjectState> s;
  double x = 0.0;
  double v = 10.0;
  for (int t = 0; t < 30; ++t) {
    s.push_back({x, 0.0, 0.0, v, 0.0, true});
    const double a = t >= 10 ? 2.0 : 0.0;
    v += a * kDt;
    x += v * kDt;
  }
  EXPECT_FALSE(comfortable(s, kDt));
  // A 0 -> 3 m/s^2 step fails too.
  s.clear();
  v = 10.0;
  for (int t = 0; t < 30; ++t) {
    s.push_back({0.0, 0.0, 0.0, v, 0.0, true});
    v += (t >= 10 ? 3.0 : 0.0) * kDt;
  }
  EXPECT_FALSE(comfortable(s, kDt));
}

TEST(Comfort, SteadyCurve) {
  // Radius 20 m at 8 m/s: lateral 3.2 m/s^2, yaw rate 0.4 rad/s.
  std::vector<ObjectState> s;
  for (int t = 0; t < 60; ++t) {
    const double yaw = 0.4 * t * kDt;
    s.push_back({20 * std::sin(yaw), 20 - 20 * std::cos(yaw), yaw, 8 * std::cos(yaw),
                 8 * std::sin(yaw), true});
  }
  EXPECT_TRUE(comfortable(s, kDt));
}

TEST(Comfort, TooShortIsComfortable) {
  std::vector<ObjectState> s{{0, 0, 0, 0, 0, true}, {0, 0, 0, 30, 0, true}};
  EXPECT_TRUE(comfortable(s, kDt));
}

TEST(Metrics, ExpertSelfScoreOnSyntheticScenes) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 60; ++i) {
    const auto sc = std::make_shared<const Scenario>(
        generate_synthetic(sample_synthetic_spec(rng), static_cast<std::uint64_t>(i)));
    const MetricValues m = metrics_of(replay(sc));
    EXPECT_FALSE(m.collision) << sc->id;
    EXPECT_FALSE(m.offroad) << sc->id;
    EXPECT_FALSE(m.red_light) << sc->id;
    EXPECT_NEAR(m.progress_ratio, 1.0, 1e-3) << sc->id;
    EXPECT_EQ(m.progress_along_route, std::min(1.0, m.progress_ratio));
  }
}
