#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "midsim/env.hpp"
#include "midsim/metrics.hpp"
#include "midsim/planners.hpp"

namespace midsim {

struct BatchOptions {
  std::size_t batch_size = 1;
  std::size_t workers = 0;  // 0: min(batch_size, hardware threads)
  EnvConfig env{};
  EvalSetup setup{};
  std::uint64_t seed = 0;
};

inline Rollout errored_rollout(std::shared_ptr<const Scenario> scenario, std::string what) {
  Rollout r;
  r.ego_index = std::max(0, scenario ? scenario->sdc_index() : 0);
  r.scenario = std::move(scenario);
  r.errored = true;
  r.error = std::move(what);
  return r;
}

// Keeps `batch_size` episodes in flight, refilling a slot as soon as its
// episode ends. Results come back in submission order; a failing episode
// yields an errored rollout and the rest continue.
inline std::vector<Rollout> run_batch(std::span<const EpisodeTask> tasks, const Policy& policy,
                                      const BatchOptions& opt = {}) {
  if (opt.batch_size < 1) throw Error("batch_size must be >= 1");
  std::vector<Rollout> results(tasks.size());
  if (tasks.empty()) return results;

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t slots = std::min(opt.batch_size, tasks.size());
  const std::size_t workers =
      std::clamp<std::size_t>(opt.workers == 0 ? std::min(slots, hw) : opt.workers, 1, slots);
  std::atomic<std::size_t> next{0};

  auto work = [&](std::size_t worker) {
    struct Slot {
      std::size_t task = 0;
      std::optional<EnvState> env;
    };
    std::vector<Slot> mine;
    for (std::size_t s = worker; s < slots; s += workers) mine.emplace_back();
    auto fill = [&](Slot& slot) {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return false;
        slot.task = i;
        try {
          slot.env = start_episode(tasks[i].scenario, opt.env, opt.setup, opt.seed,
                                   tasks[i].scene);
          return true;
        } catch (const std::exception& e) {
          results[i] = errored_rollout(tasks[i].scenario, e.what());
        }
      }
    };
    std::size_t active = 0;
    for (Slot& s : mine) active += fill(s);
    while (active > 0) {
      for (Slot& s : mine) {
        if (!s.env) continue;
        try {
          advance(*s.env, policy, opt.env);
          if (!s.env->done) continue;
          results[s.task] = to_rollout(*s.env);
        } catch (const std::exception& e) {
          results[s.task] = errored_rollout(tasks[s.task].scenario, e.what());
        }
        s.env.reset();
        if (!fill(s)) --active;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return results;
}

inline std::vector<Rollout> run_batch(std::span<const std::shared_ptr<const Scenario>> scenarios,
                                      const Policy& policy, const BatchOptions& opt = {}) {
  std::vector<EpisodeTask> tasks;
  tasks.reserve(scenarios.size());
  for (const auto& s : scenarios) tasks.push_back({s, nullptr});
  return run_batch(tasks, policy, opt);
}

}  // namespace midsim
