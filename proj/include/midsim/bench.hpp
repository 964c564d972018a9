#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "midsim/batch.hpp"
#include "midsim/planners.hpp"

namespace midsim {

struct BenchOptions {
  std::vector<std::size_t> batch_sizes{1, 32};
  std::size_t workers = 0;   // as in BatchOptions
  double min_seconds = 0.5;  // per cell; the scenario set is replayed until reached
  ObservationConfig observation{};
};

struct BenchCell {
  std::string config;  // env | env+obs | env+metrics | env+obs+metrics
  std::size_t batch_size = 1;
  std::uint64_t steps = 0;
  double seconds = 0.0;
  double sps = 0.0;
};

inline constexpr std::array<const char*, 4> kBenchConfigs{"env", "env+obs", "env+metrics",
                                                          "env+obs+metrics"};

// Steps per second while replaying expert trajectories; a step is one
// environment transition of one episode.
inline std::vector<BenchCell> bench_throughput(
    std::span<const std::shared_ptr<const Scenario>> scenarios, const BenchOptions& opt = {}) {
  std::vector<EpisodeTask> tasks;
  tasks.reserve(scenarios.size());
  for (const auto& s : scenarios) tasks.push_back({s, SceneContext::build(s)});
  const ExpertPolicy expert;
  std::vector<BenchCell> out;
  for (std::size_t c = 0; c < kBenchConfigs.size(); ++c) {
    EnvConfig env;
    if (c == 1 || c == 3) env.observation = opt.observation;
    env.stepwise_metrics = c >= 2;
    for (std::size_t b : opt.batch_sizes) {
      BatchOptions bo;
      bo.batch_size = b;
      bo.workers = opt.workers;
      bo.env = env;
      BenchCell cell;
      cell.config = kBenchConfigs[c];
      cell.batch_size = b;
      const auto t0 = std::chrono::steady_clock::now();
      do {
        for (const Rollout& r : run_batch(tasks, expert, bo)) {
          if (!r.errored) cell.steps += static_cast<std::uint64_t>(r.termination_step - r.start_step);
        }
        cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } while (cell.seconds < opt.min_seconds && !tasks.empty());
      cell.sps = cell.seconds > 0.0 ? static_cast<double>(cell.steps) / cell.seconds : 0.0;
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace midsim
