#include "tide/trajectory.hpp"

#include <algorithm>
#include <tuple>

namespace tide {

std::string MemoryMode::to_string() const {
  switch (kind) {
    case Kind::kFull: return "full";
    case Kind::kNone: return "none";
    case Kind::kWindowed: return "windowed:" + std::to_string(window);
  }
  return "full";
}

StateRepr StateRepr::text(std::string value) {
  StateRepr s;
  s.payload_ = std::move(value);
  return s;
}

StateRepr StateRepr::vector(std::vector<double> values) {
  StateRepr s;
  s.payload_ = std::move(values);
  return s;
}

std::vector<StateRepr> Trajectory::state_sequence() const {
  std::vector<StateRepr> out;
  out.reserve(steps.size() + 1);
  for (const auto& step : steps) out.push_back(step.state);
  out.push_back(final_state);
  return out;
}

std::vector<std::string> Trajectory::action_sequence() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& step : steps) out.push_back(step.action);
  return out;
}

void sort_trajectories(RunLog& run) {
  std::stable_sort(run.trajectories.begin(), run.trajectories.end(),
                   [](const Trajectory& a, const Trajectory& b) {
                     return std::tie(a.task_id, a.rollout_idx) < std::tie(b.task_id, b.rollout_idx);
                   });
}

}  // namespace tide
