#pragma once

#include <memory>
#include <span>
#include <vector>

#include "midsim/scenario.hpp"

namespace midsim {

// Logged scenario plus simulated trajectories for the controlled objects.
// Uncontrolled objects read through to the log.
class SimulatorState {
 public:
  SimulatorState() = default;
  SimulatorState(std::shared_ptr<const Scenario> scenario, int timestep,
                 std::span<const int> controlled)
      : scenario_(std::move(scenario)), timestep_(timestep) {
    slot_.assign(scenario_->objects.size(), -1);
    for (int idx : controlled) {
      if (slot_[static_cast<std::size_t>(idx)] >= 0) continue;
      slot_[static_cast<std::size_t>(idx)] = static_cast<int>(controlled_.size());
      controlled_.push_back(idx);
      // History is replayed; the future is cleared until simulated.
      std::vector<ObjectState> traj = scenario_->objects[static_cast<std::size_t>(idx)].states;
      for (std::size_t t = static_cast<std::size_t>(timestep) + 1; t < traj.size(); ++t) {
        traj[t] = ObjectState{};
      }
      overrides_.push_back(std::move(traj));
    }
  }

  const Scenario& scenario() const { return *scenario_; }
  const std::shared_ptr<const Scenario>& scenario_ptr() const { return scenario_; }
  int timestep() const { return timestep_; }
  void set_timestep(int t) { timestep_ = t; }
  std::size_t num_objects() const { return slot_.size(); }

  bool is_controlled(int idx) const { return slot_[static_cast<std::size_t>(idx)] >= 0; }
  const std::vector<int>& controlled() const { return controlled_; }

  const ObjectState& state(int idx, int t) const {
    const int slot = slot_[static_cast<std::size_t>(idx)];
    if (slot >= 0) return overrides_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(t)];
    return scenario_->objects[static_cast<std::size_t>(idx)].states[static_cast<std::size_t>(t)];
  }
  const ObjectState& current(int idx) const { return state(idx, timestep_); }

  std::span<const ObjectState> trajectory(int idx) const {
    const int slot = slot_[static_cast<std::size_t>(idx)];
    if (slot >= 0) return overrides_[static_cast<std::size_t>(slot)];
    return scenario_->objects[static_cast<std::size_t>(idx)].states;
  }

  const ObjectMetadata& meta(int idx) const {
    return scenario_->objects[static_cast<std::size_t>(idx)].meta;
  }

  OrientedBox box(int idx, int t) const {
    const ObjectState& s = state(idx, t);
    const ObjectMetadata& m = meta(idx);
    return {s.position(), s.yaw, m.length, m.width};
  }

  // Only controlled objects can be written.
  void set_state(int idx, int t, const ObjectState& s) {
    overrides_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(idx)])]
              [static_cast<std::size_t>(t)] = s;
  }

  bool operator==(const SimulatorState& o) const {
    return scenario_ == o.scenario_ && timestep_ == o.timestep_ &&
           controlled_ == o.controlled_ && overrides_ == o.overrides_;
  }

 private:
  std::shared_ptr<const Scenario> scenario_;
  int timestep_ = 0;
  std::vector<int> slot_;
  std::vector<int> controlled_;
  std::vector<std::vector<ObjectState>> overrides_;
};

}  // namespace midsim
