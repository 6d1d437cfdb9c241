#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tide/trajectory.hpp"

namespace tide::testing {

/// Trajectory whose states are the characters of `states` (one text state per
/// char) and whose actions are `actions`; the last state becomes final_state.
inline Trajectory make_trajectory(const std::string& states, const std::vector<std::string>& actions,
                                  std::string task_id = "task", int rollout = 0) {
  Trajectory traj;
  traj.task_id = std::move(task_id);
  traj.rollout_idx = rollout;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    Step step;
    step.turn = static_cast<int>(k);
    step.state = StateRepr::text(std::string(1, states[k]));
    step.action = actions[k];
    traj.steps.push_back(step);
  }
  traj.final_state = StateRepr::text(std::string(1, states.back()));
  return traj;
}

/// Trajectory with `length` actions that is solved at `success_turn` (or not).
inline Trajectory make_outcome(const std::string& task_id, std::optional<int> success_turn, int length) {
  Trajectory traj;
  traj.task_id = task_id;
  for (int k = 0; k < length; ++k) {
    Step step;
    step.turn = k;
    step.state = StateRepr::text("s" + std::to_string(k));
    step.action = "act";
    traj.steps.push_back(step);
  }
  traj.final_state = StateRepr::text("end");
  traj.success = success_turn.has_value();
  traj.success_turn = success_turn;
  return traj;
}

inline RunLog make_run(const std::vector<std::optional<int>>& turns, int t_max, std::string run_id = "run") {
  RunLog run;
  run.metadata.run_id = std::move(run_id);
  run.metadata.model_name = "model";
  run.metadata.environment_name = "env";
  run.metadata.t_max = t_max;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const int length = turns[i] ? std::max(*turns[i], 1) : t_max;
    run.trajectories.push_back(make_outcome("task" + std::to_string(i), turns[i], length));
  }
  return run;
}

/// Random success turns in [1, max_turn] or unsolved.
inline std::vector<std::optional<int>> random_turns(std::mt19937_64& rng, int n, int max_turn) {
  std::uniform_int_distribution<int> pick(0, max_turn);
  std::vector<std::optional<int>> out;
  for (int i = 0; i < n; ++i) {
    const int v = pick(rng);
    out.push_back(v == 0 ? std::nullopt : std::optional<int>(v));
  }
  return out;
}

}  // namespace tide::testing
