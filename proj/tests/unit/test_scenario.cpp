#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "midsim/scenario_io.hpp"
#include "midsim/synthetic.hpp"

using namespace midsim;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "midsim_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_bytes(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Synthetic, StraightExpertCovers80Meters) {
  SyntheticSpec spec;
  spec.oncoming = 0;
  const Scenario s = generate_synthetic(spec, 1);
  ASSERT_TRUE(validate_scenario(s).empty());
  ASSERT_EQ(s.objects.size(), 1u);
  const auto& ego = s.objects[0].states;
  EXPECT_NEAR(distance(ego[kInitSteps].position(), ego[kHorizon - 1].position()), 80.0, 1e-9);
  for (const ObjectState& st : ego) {
    EXPECT_NEAR(st.y, 0.0, 1e-12);
    EXPECT_NEAR(st.speed(), 10.0, 1e-12);
  }
}

TEST(Synthetic, DeterministicBytes) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 8; ++i) {
    const SyntheticSpec spec = sample_synthetic_spec(rng);
    EXPECT_EQ(encode_scenario(generate_synthetic(spec, 42)), encode_scenario(generate_synthetic(spec, 42)));
  }
}

TEST(Synthetic, LeadKeepsConstantGap) {
  SyntheticSpec spec;
  spec.oncoming = 0;
  spec.lead = VehicleSpec{20.0, 10.0};
  const Scenario s = generate_synthetic(spec, 0);
  double min_gap = kInf;
  for (int t = 0; t < kHorizon; ++t) {
    min_gap = std::min(min_gap, distance(s.objects[0].states[t].position(), s.objects[1].states[t].position()));
  }
  EXPECT_NEAR(min_gap, 20.0, 0.1);
}

TEST(Synthetic, OverlappingLeadIsInfeasible) {
  SyntheticSpec spec;
  spec.lead = VehicleSpec{3.0, 10.0};
  EXPECT_THROW(generate_synthetic(spec, 0), Error);
  SyntheticSpec too_short;
  too_short.length = 50.0;
  EXPECT_THROW(generate_synthetic(too_short, 0), Error);
}

TEST(Synthetic, RandomSpecsSatisfyInvariants) {
  std::mt19937_64 rng(77);
  int layouts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 300; ++i) {
    const SyntheticSpec spec = sample_synthetic_spec(rng);
    const Scenario s = generate_synthetic(spec, static_cast<std::uint64_t>(i));
    ASSERT_TRUE(validate_scenario(s).empty()) << s.id << ": " << validate_scenario(s).front();
    ++layouts[static_cast<int>(spec.layout)];
  }
  for (int n : layouts) EXPECT_GT(n, 30);
}

TEST(Synthetic, TIntersectionHasTwoRoutesRankedByEndpoint) {
  for (TurnDirection turn : {TurnDirection::kRight, TurnDirection::kLeft}) {
    SyntheticSpec spec;
    spec.layout = SyntheticLayout::kTIntersection;
    spec.ego_speed = 5.0;
    spec.ego_start = 5.0;
    spec.turn = turn;
    const Scenario s = generate_synthetic(spec, 0);
    ASSERT_EQ(s.sdc_paths.size(), 2u);
    const Vec2 end = s.objects[0].states.back().position();
    const double d0 = Polyline(s.sdc_paths[0].waypoints).project(end).distance;
    const double d1 = Polyline(s.sdc_paths[1].waypoints).project(end).distance;
    EXPECT_TRUE(s.sdc_paths[0].on_route);
    EXPECT_LT(d0, 0.5);
    EXPECT_GT(d1, 5.0);
    // The turn heads east (right) or west (left).
    EXPECT_EQ(s.sdc_paths[0].waypoints.back().x > 0.0, turn == TurnDirection::kRight);
  }
}

TEST(Synthetic, RedLightStopsExpertBeforeLine) {
  SyntheticSpec spec;
  spec.oncoming = 0;
  spec.light = LightState::kRed;
  spec.light_s = 70.0;
  const Scenario s = generate_synthetic(spec, 0);
  const auto& last = s.objects[0].states.back();
  EXPECT_LT(last.x + 0.5 * 4.5, 70.0);
  EXPECT_NEAR(last.speed(), 0.0, 1e-9);
}

TEST(Validate, RejectsBrokenInvariants) {
  Scenario s = generate_synthetic({}, 0);
  s.horizon = 80;
  EXPECT_FALSE(validate_scenario(s).empty());
  s = generate_synthetic({}, 0);
  s.objects[0].meta.is_sdc = false;
  EXPECT_FALSE(validate_scenario(s).empty());
  s = generate_synthetic({}, 0);
  s.objects[0].meta.width = 5.0;
  EXPECT_FALSE(validate_scenario(s).empty());
  s = generate_synthetic({}, 0);
  for (auto& p : s.sdc_paths) p.on_route = false;
  EXPECT_FALSE(validate_scenario(s).empty());
  s = generate_synthetic({}, 0);
  s.roadgraph[3].dir_x = 0.5;
  EXPECT_FALSE(validate_scenario(s).empty());
}

TEST(ScenarioIo, EmptyFileGivesNothing) {
  const auto p = temp_file("empty.msc");
  write_bytes(p, "");
  const LoadResult r = load_scenarios(p);
  EXPECT_TRUE(r.scenarios.empty());
  EXPECT_EQ(r.warnings, 0u);
}

TEST(ScenarioIo, LimitTruncates) {
  std::vector<Scenario> three;
  for (int i = 0; i < 3; ++i) three.push_back(generate_synthetic({}, static_cast<std::uint64_t>(i)));
  const auto p = temp_file("three.msc");
  save_scenarios(p, three);
  EXPECT_TRUE(std::filesystem::exists(sidecar_path(p)));
  const LoadResult r = load_scenarios(p, 2);
  ASSERT_EQ(r.scenarios.size(), 2u);
  EXPECT_EQ(r.scenarios[0], three[0]);
  EXPECT_EQ(r.scenarios[1], three[1]);
}

TEST(ScenarioIo, TooManyObjectsIsSkippedWithWarning) {
  Scenario big = generate_synthetic({}, 0);
  const SceneObject proto = big.objects[0];
  for (int i = 1; big.objects.size() < 65; ++i) {
    SceneObject o = proto;
    o.meta.id = i;
    o.meta.is_sdc = false;
    big.objects.push_back(o);
  }
  std::vector<Scenario> recs{generate_synthetic({}, 1), big, generate_synthetic({}, 2)};
  const auto p = temp_file("big.msc");
  save_scenarios(p, recs);
  const LoadResult r = load_scenarios(p);
  EXPECT_EQ(r.scenarios.size(), 2u);
  EXPECT_EQ(r.warnings, 1u);
}

TEST(ScenarioIo, SaveLoadIsBitIdentical) {
  std::mt19937_64 rng(3);
  std::vector<Scenario> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(generate_synthetic(sample_synthetic_spec(rng), static_cast<std::uint64_t>(i)));
  const auto a = temp_file("a.msc");
  const auto b = temp_file("b.msc");
  save_scenarios(a, recs);
  const LoadResult r = load_scenarios(a);
  ASSERT_EQ(r.scenarios.size(), recs.size());
  save_scenarios(b, r.scenarios);
  EXPECT_EQ(read_bytes(a), read_bytes(b));
}

TEST(ScenarioIo, TruncatedTailWarns) {
  std::vector<Scenario> recs{generate_synthetic({}, 1), generate_synthetic({}, 2)};
  std::string bytes = encode_record(recs[0]) + encode_record(recs[1]);
  bytes.resize(bytes.size() - 17);
  std::istringstream in(bytes);
  ScenarioReader reader(in);
  EXPECT_TRUE(reader.next().has_value());
  EXPECT_FALSE(reader.next().has_value());
  EXPECT_EQ(reader.warnings(), 1u);
}

TEST(ScenarioIo, ArbitraryBytesNeverCrash) {
  std::mt19937_64 rng(8);
  const std::string good = encode_record(generate_synthetic({}, 1));
  for (int trial = 0; trial < 500; ++trial) {
    std::string bytes;
    if (trial % 2 == 0) {
      bytes.resize(rng() % 300);
      for (char& c : bytes) c = static_cast<char>(rng());
    } else {
      bytes = good;
      for (int k = 0; k < 8; ++k) bytes[rng() % bytes.size()] = static_cast<char>(rng());
    }
    std::istringstream in(bytes);
    ScenarioReader reader(in);
    EXPECT_NO_THROW({
      while (reader.next()) {
      }
    });
  }
}

TEST(ScenarioIo, BadSidecarIsFatal) {
  const auto p = temp_file("sidecar.msc");
  save_scenarios(p, std::vector<Scenario>{generate_synthetic({}, 0)});
  write_bytes(sidecar_path(p), R"({"format": "midsim.scenario", "schema_version": 9})");
  EXPECT_THROW(load_scenarios(p), Error);
  EXPECT_THROW(load_scenarios(temp_file("missing.msc")), Error);
}

TEST(ScenarioIo, JsonInterchangeRoundTrip) {
  SyntheticSpec spec;
  spec.layout = SyntheticLayout::kTIntersection;
  spec.ego_speed = 5.0;
  const Scenario s = generate_synthetic(spec, 4);
  const Scenario back = scenario_from_json(nlohmann::json::parse(scenario_to_json(s).dump()));
  EXPECT_EQ(back, s);
}

TEST(ScenarioIo, JsonWithoutPathsReconstructsThem) {
  const Scenario s = generate_synthetic({}, 4);
  auto j = scenario_to_json(s);
  j.erase("sdc_paths");
  for (auto& rg : j["roadgraph"]) rg.erase("dirs");
  const Scenario back = scenario_from_json(j);
  EXPECT_TRUE(validate_scenario(back).empty());
  ASSERT_FALSE(back.sdc_paths.empty());
  EXPECT_TRUE(back.sdc_paths.front().on_route);
}

TEST(ScenarioIo, ConvertDirectorySkipsBadFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "midsim_tests" / "convert_in";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 2; ++i) {
    std::ofstream(dir / ("s" + std::to_string(i) + ".json")) << scenario_to_json(generate_synthetic({}, static_cast<std::uint64_t>(i))).dump();
  }
  std::ofstream(dir / "broken.json") << R"({"id": "x"})";
  const auto out = temp_file("converted.msc");
  const ConvertResult r = convert_json_dir(dir, out);
  EXPECT_EQ(r.written, 2u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(load_scenarios(out).scenarios.size(), 2u);
}
