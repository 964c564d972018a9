#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "midsim/bench.hpp"
#include "midsim/evalcli.hpp"
#include "midsim/render.hpp"
#include "midsim/scenario_io.hpp"

using namespace midsim;
using namespace fixtures;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("midsim_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string key_of(const std::string& yaml, const fs::path& base = {}) {
  try {
    cli::parse_run_config_text(yaml, base);
  } catch (const cli::ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

std::vector<std::shared_ptr<const Scenario>> shared(std::vector<Scenario> v) {
  std::vector<std::shared_ptr<const Scenario>> out;
  for (auto& s : v) out.push_back(std::make_shared<const Scenario>(std::move(s)));
  return out;
}

}  // namespace

TEST(RunConfig, MinimalSyntheticDefaults) {
  const auto c = cli::parse_run_config_text("synthetic: {count: 4, seed: 7}\n");
  ASSERT_TRUE(c.synthetic);
  EXPECT_EQ(c.synthetic->count, 4u);
  EXPECT_EQ(c.synthetic->seed, 7u);
  ASSERT_EQ(c.planners.size(), 1u);
  EXPECT_EQ(c.planners[0].name, "expert");
  ASSERT_EQ(c.setups.size(), 1u);
  EXPECT_EQ(c.batch_size, 1u);
}

TEST(RunConfig, ErrorsNameTheKey) {
  EXPECT_EQ(key_of("synthetic: {count: 4}\nplaner: idm\n"), "planer");
  EXPECT_EQ(key_of("synthetic: {count: 4}\nplanner: {name: idm, idm: {vdesired: 3}}\n"),
            "planner.idm.vdesired");
  EXPECT_EQ(key_of("synthetic: {count: 4}\nbatch_size: 0\n"), "batch_size");
  EXPECT_EQ(key_of("synthetic: {count: -1}\n"), "synthetic.count");
  EXPECT_EQ(key_of("synthetic: {seed: 1}\n"), "synthetic.count");
  EXPECT_EQ(key_of("planner: expert\n"), "scenarios");
  EXPECT_EQ(key_of("synthetic: {count: 1}\nplanner: {name: rocket}\n"), "planner.name");
  EXPECT_EQ(key_of("synthetic: {count: 1}\nsetups: [reactive, {kind: perturbed, sigma: oops}]\n"),
            "setups[1].sigma");
  EXPECT_EQ(key_of("synthetic: {count: 1}\nobservation: {top_k_objects: x}\n"),
            "observation.top_k_objects");
}

TEST(RunConfig, MalformedYamlIsConfigError) {
  EXPECT_THROW(cli::parse_run_config_text("synthetic: [1, 2\n"), cli::ConfigError);
}

TEST(RunConfig, ReferencedFilesMustExist) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(key_of("scenarios: nowhere.bin\n", dir), "scenarios");
  EXPECT_EQ(key_of("scenarios: [nowhere.bin]\n", dir), "scenarios[0]");
  const auto set = synthetic_set(2, 1);
  save_scenarios(dir / "set.bin", set);
  const auto c = cli::parse_run_config_text("scenarios: set.bin\n", dir);
  ASSERT_EQ(c.scenario_files.size(), 1u);
  EXPECT_EQ(c.scenario_files[0], dir / "set.bin");
}

TEST(RunConfig, OutputDirPriority) {
  auto c = cli::parse_run_config_text("synthetic: {count: 1}\n");
  ::setenv(cli::kOutputDirEnv, "/tmp/from_env", 1);
  EXPECT_EQ(cli::output_dir_for(c), fs::path("/tmp/from_env"));
  c.output_dir = "/tmp/from_config";
  EXPECT_EQ(cli::output_dir_for(c), fs::path("/tmp/from_config"));
  EXPECT_EQ(cli::output_dir_for(c, fs::path("/tmp/from_flag")), fs::path("/tmp/from_flag"));
  ::unsetenv(cli::kOutputDirEnv);
  c.output_dir.reset();
  EXPECT_EQ(cli::output_dir_for(c), fs::path(cli::kDefaultOutputDir));
}

TEST(RunConfig, HashTracksContent) {
  const auto a = cli::parse_run_config_text("synthetic: {count: 3}\nseed: 1\n");
  const auto b = cli::parse_run_config_text("seed: 1\nsynthetic: {count: 3}\n");
  const auto c = cli::parse_run_config_text("synthetic: {count: 3}\nseed: 2\n");
  EXPECT_EQ(cli::config_hash(a), cli::config_hash(b));
  EXPECT_NE(cli::config_hash(a), cli::config_hash(c));
}

TEST(Evaluate, EpisodesFileIsReproducible) {
  const auto cfg = cli::parse_run_config_text(
      "synthetic: {count: 6, seed: 3}\n"
      "planners: [expert, idm]\n"
      "setups: [nonreactive, {kind: perturbed, sigma: 0.5}]\n"
      "seed: 11\n");
  const auto scenarios = cli::load_run_scenarios(cfg);
  ASSERT_EQ(scenarios.size(), 6u);
  const auto a = cli::evaluate(cfg, scenarios);
  const auto b = cli::evaluate(cfg, scenarios);
  ASSERT_EQ(a.cells.size(), 4u);
  const std::string ja = cli::episodes_jsonl(a);
  EXPECT_EQ(ja, cli::episodes_jsonl(b));
  EXPECT_EQ(cli::csv_report(a), cli::csv_report(b));

  std::istringstream lines(ja);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("scenario_id"));
    EXPECT_TRUE(j.contains("metrics"));
    ++n;
  }
  EXPECT_EQ(n, 4u * 6u);
  for (const auto& cell : a.cells) EXPECT_EQ(cell.records.size(), 6u);
}

TEST(Evaluate, ExpertIsPerfectOnSyntheticScenes) {
  const auto cfg = cli::parse_run_config_text("synthetic: {count: 10, seed: 5}\n");
  const auto ev = cli::evaluate(cfg, cli::load_run_scenarios(cfg));
  ASSERT_EQ(ev.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(ev.cells[0].table.accuracy, 100.0);
  EXPECT_EQ(ev.cells[0].table.errored, 0u);
}

TEST(Evaluate, WriteReportsProducesAllFiles) {
  const fs::path dir = scratch("reports");
  const auto cfg = cli::parse_run_config_text("synthetic: {count: 2}\nplanner: idm\n");
  const auto scenarios = cli::load_run_scenarios(cfg);
  const auto ev = cli::evaluate(cfg, scenarios);
  cli::write_reports(dir, cfg, ev, scenarios.size());
  for (const char* f : {"report.csv", "report.json", "episodes.jsonl", "manifest.json"}) {
    EXPECT_TRUE(fs::is_regular_file(dir / f)) << f;
  }
  std::ifstream in(dir / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["config_hash"], cli::config_hash(cfg));
  EXPECT_EQ(m["version"], std::string(cli::kVersion));
}

TEST(Evaluate, PdmAtFaultNoWorseThanIdmOnLeadAndBlockedScenes) {
  SceneBuilder lead = two_way_road();
  lead.object(0, cruise(10, 0, 10), true).object(1, cruise(40, 0, 4));
  std::vector<std::shared_ptr<const Scenario>> scenes{lead.build("slow-lead"),
                                                      blocked_lane_scene()};
  cli::RunConfig cfg;
  cfg.planners.resize(2);
  cfg.planners[0].name = "idm";
  cfg.planners[1].name = "pdm";
  cfg.setups.resize(1);
  const auto ev = cli::evaluate(cfg, scenes);
  ASSERT_EQ(ev.cells.size(), 2u);
  EXPECT_LE(ev.cells[1].table.at_fault_collisions, ev.cells[0].table.at_fault_collisions);
  EXPECT_EQ(ev.cells[1].table.errored, 0u);
}

TEST(Render, DeterministicAndMapOnly) {
  const auto sc = std::make_shared<const Scenario>(synthetic_set(1, 2)[0]);
  const Rollout r = run_episode(sc, ExpertPolicy{}, {}, {}, 0);
  const std::string a = render_svg(*sc, &r);
  EXPECT_EQ(a, render_svg(*sc, &r));
  EXPECT_NE(a.find("id=\"ego_trail\""), std::string::npos);
  EXPECT_NE(a.find("no collision"), std::string::npos);

  const std::string map = render_svg(*sc);
  EXPECT_NE(map.find("map only"), std::string::npos);
  EXPECT_EQ(map.find("ego_trail"), std::string::npos);
  const Rollout empty;
  EXPECT_EQ(render_svg(*sc, &empty), map);
}

TEST(Render, LegendMarksCollision) {
  SceneBuilder b = two_way_road();
  b.object(0, cruise(10, 0, 10), true).object(7, parked(40, 0));
  const auto sc = b.build("crash");
  const Rollout r = replay(sc);
  const std::string svg = render_svg(*sc, &r);
  EXPECT_NE(svg.find("collision at step"), std::string::npos);
  EXPECT_NE(svg.find("with object 7"), std::string::npos);
  EXPECT_NE(svg.find("#d0021b"), std::string::npos);
}

TEST(Bench, EightCellsAndObservationCostsSomething) {
  const auto scenes = shared(synthetic_set(4, 9));
  BenchOptions opt;
  opt.min_seconds = 0.05;
  opt.workers = 1;
  const auto cells = bench_throughput(scenes, opt);
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& c : cells) {
    EXPECT_GT(c.steps, 0u);
    EXPECT_GT(c.sps, 0.0);
  }
  // env at batch 1 against env+obs at batch 1
  EXPECT_EQ(cells[0].config, "env");
  EXPECT_EQ(cells[2].config, "env+obs");
  EXPECT_LE(cells[2].sps, cells[0].sps * 1.05);
}

TEST(Convert, ContainerJsonRoundTrip) {
  const fs::path dir = scratch("convert");
  const auto set = synthetic_set(3, 4);
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::ofstream(dir / ("s" + std::to_string(i) + ".json")) << scenario_to_json(set[i]).dump();
  }
  const auto r = convert_json_dir(dir, dir / "out.bin");
  EXPECT_EQ(r.written, 3u);
  const auto back = load_scenarios(dir / "out.bin");
  ASSERT_EQ(back.scenarios.size(), 3u);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(encode_scenario(back.scenarios[i]), encode_scenario(set[i]));
  }
}
