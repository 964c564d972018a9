#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "midsim/bench.hpp"
#include "midsim/evalcli.hpp"
#include "midsim/render.hpp"
#include "midsim/scenario_io.hpp"
#include "midsim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace midsim;

namespace {

int cmd_evaluate(const fs::path& config_path, const std::optional<fs::path>& out_flag,
                 std::optional<std::size_t> workers) {
  cli::RunConfig cfg = cli::load_run_config(config_path);
  if (workers) cfg.workers = *workers;
  std::vector<std::string> diagnostics;
  const auto scenarios = cli::load_run_scenarios(cfg, &diagnostics);
  for (const auto& d : diagnostics) std::cerr << "warning: " << d << "\n";
  const auto ev = cli::evaluate(cfg, scenarios);
  const fs::path dir = cli::output_dir_for(cfg, out_flag);
  cli::write_reports(dir, cfg, ev, scenarios.size());
  for (const auto& cell : ev.cells) {
    std::printf("%-8s %-20s episodes=%zu accuracy=%.2f v_max_score=%.4f nuplan_score=%.4f\n",
                cell.planner.c_str(), cell.setup.c_str(), cell.table.episodes, cell.table.accuracy,
                cell.table.v_max_score, cell.table.nuplan_score);
  }
  std::printf("reports written to %s\n", dir.string().c_str());
  return 0;
}

int cmd_render(const fs::path& scenarios_path, const std::string& id, std::size_t index,
               const std::string& planner, std::uint64_t seed, const fs::path& out) {
  LoadResult loaded = load_scenarios(scenarios_path);
  if (loaded.scenarios.empty()) throw Error("no scenarios in " + scenarios_path.string());
  std::size_t pick = index;
  if (!id.empty()) {
    pick = loaded.scenarios.size();
    for (std::size_t i = 0; i < loaded.scenarios.size(); ++i) {
      if (loaded.scenarios[i].id == id) pick = i;
    }
    if (pick == loaded.scenarios.size()) throw Error("scenario id not found: " + id);
  }
  if (pick >= loaded.scenarios.size()) throw Error("scenario index out of range");
  auto scenario = std::make_shared<const Scenario>(std::move(loaded.scenarios[pick]));
  std::string svg;
  if (planner == "none") {
    svg = render_svg(*scenario);
  } else {
    cli::PlannerSpec spec;
    spec.name = planner;
    const Rollout r = run_episode(scenario, *cli::make_policy(spec), {}, {}, seed);
    svg = render_svg(*scenario, &r);
  }
  cli::write_file(out, svg);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_bench(const std::optional<fs::path>& scenarios_path, std::size_t synthetic,
              std::uint64_t seed, double min_seconds, std::size_t workers,
              const std::optional<fs::path>& out) {
  std::vector<std::shared_ptr<const Scenario>> scenarios;
  if (scenarios_path) {
    for (auto& s : load_scenarios(*scenarios_path).scenarios) {
      scenarios.push_back(std::make_shared<const Scenario>(std::move(s)));
    }
  } else {
    for (auto& s : synthetic_set(synthetic, seed)) {
      scenarios.push_back(std::make_shared<const Scenario>(std::move(s)));
    }
  }
  BenchOptions opt;
  opt.min_seconds = min_seconds;
  opt.workers = workers;
  const auto cells = bench_throughput(scenarios, opt);
  nlohmann::ordered_json j;
  j["scenarios"] = scenarios.size();
  j["cells"] = nlohmann::ordered_json::array();
  std::printf("%-18s %6s %12s\n", "config", "batch", "sps");
  for (const auto& c : cells) {
    std::printf("%-18s %6zu %12.1f\n", c.config.c_str(), c.batch_size, c.sps);
    nlohmann::ordered_json cell;
    cell["config"] = c.config;
    cell["batch_size"] = c.batch_size;
    cell["steps"] = c.steps;
    cell["seconds"] = c.seconds;
    cell["sps"] = c.sps;
    j["cells"].push_back(cell);
  }
  if (out) cli::write_file(*out, j.dump(2) + "\n");
  return 0;
}

int cmd_convert(const fs::path& input, const fs::path& output) {
  if (fs::is_directory(input)) {
    const ConvertResult r = convert_json_dir(input, output);
    for (const auto& d : r.diagnostics) std::cerr << "skipped " << d << "\n";
    std::printf("wrote %zu scenarios to %s, skipped %zu\n", r.written, output.string().c_str(),
                r.skipped);
    return 0;
  }
  const LoadResult loaded = load_scenarios(input);
  for (const auto& d : loaded.diagnostics) std::cerr << "warning: " << d << "\n";
  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec) throw Error("cannot create " + output.string() + ": " + ec.message());
  for (std::size_t i = 0; i < loaded.scenarios.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.json", i);
    cli::write_file(output / name, scenario_to_json(loaded.scenarios[i]).dump() + "\n");
  }
  std::printf("wrote %zu json files to %s\n", loaded.scenarios.size(), output.string().c_str());
  return 0;
}

int cmd_generate(std::size_t count, std::uint64_t seed, const fs::path& out) {
  const auto set = synthetic_set(count, seed);
  save_scenarios(out, set);
  std::printf("wrote %zu synthetic scenarios to %s\n", set.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"midsim: scenario simulator and closed-loop benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cli::kVersion));

  fs::path config;
  std::optional<fs::path> output_dir;
  std::optional<std::size_t> eval_workers;
  auto* evaluate = app.add_subcommand("evaluate", "run a benchmark from a YAML run config");
  evaluate->add_option("config", config, "run config file")->required();
  evaluate->add_option("-o,--output-dir", output_dir,
                       "output directory (default: config output_dir, then $MIDSIM_OUTPUT_DIR)");
  evaluate->add_option("-w,--workers", eval_workers, "worker threads (0 = auto)");

  fs::path render_in;
  fs::path render_out;
  std::string render_id;
  std::size_t render_index = 0;
  std::string render_planner = "expert";
  std::uint64_t render_seed = 0;
  auto* render = app.add_subcommand("render", "draw one scenario and its rollout as SVG");
  render->add_option("scenarios", render_in, "scenario container")->required();
  render->add_option("-o,--out", render_out, "output .svg")->required();
  render->add_option("--id", render_id, "scenario id (default: first scenario)");
  render->add_option("--index", render_index, "scenario index");
  render->add_option("--planner", render_planner, "expert | idm | pdm | none (map only)")
      ->check(CLI::IsMember({"expert", "idm", "pdm", "none"}));
  render->add_option("--seed", render_seed, "episode seed");

  std::optional<fs::path> bench_in;
  std::optional<fs::path> bench_out;
  std::size_t bench_synthetic = 32;
  std::uint64_t bench_seed = 0;
  double bench_seconds = 1.0;
  std::size_t bench_workers = 0;
  auto* bench = app.add_subcommand("bench", "steps per second replaying expert trajectories");
  bench->add_option("--scenarios", bench_in, "scenario container (default: synthetic set)");
  bench->add_option("--synthetic", bench_synthetic, "synthetic scenario count");
  bench->add_option("--seed", bench_seed, "synthetic set seed");
  bench->add_option("--min-seconds", bench_seconds, "minimum wall time per cell");
  bench->add_option("-w,--workers", bench_workers, "worker threads (0 = auto)");
  bench->add_option("-o,--out", bench_out, "write the report as JSON");

  fs::path convert_in;
  fs::path convert_out;
  auto* convert = app.add_subcommand(
      "convert", "JSON directory -> scenario container, or container -> JSON directory");
  convert->add_option("input", convert_in, "directory of .json files or a container")
      ->required()
      ->check(CLI::ExistingPath);
  convert->add_option("output", convert_out, "container file or output directory")->required();

  std::size_t gen_count = 100;
  std::uint64_t gen_seed = 0;
  fs::path gen_out;
  auto* generate = app.add_subcommand("generate", "write a synthetic scenario set");
  generate->add_option("-n,--count", gen_count, "number of scenarios");
  generate->add_option("--seed", gen_seed, "sampler seed");
  generate->add_option("-o,--out", gen_out, "output container")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) return cmd_evaluate(config, output_dir, eval_workers);
    if (*render) {
      return cmd_render(render_in, render_id, render_index, render_planner, render_seed,
                        render_out);
    }
    if (*bench) {
      return cmd_bench(bench_in, bench_synthetic, bench_seed, bench_seconds, bench_workers,
                       bench_out);
    }
    if (*convert) return cmd_convert(convert_in, convert_out);
    if (*generate) return cmd_generate(gen_count, gen_seed, gen_out);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
