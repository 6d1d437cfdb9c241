#include "tide/validate.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <utility>

#include <fmt/format.h>

namespace tide {

namespace {

class FindingSink {
 public:
  explicit FindingSink(ValidationReport& report) : report_(report) {}

  void header(std::string field, std::string message) {
    report_.findings.push_back({"", -1, std::move(field), std::move(message),
                                ErrorCode::kInvariantViolation, -1, 0});
  }

  void trajectory(const Trajectory& traj, int index, std::string field, std::string message,
                  ErrorCode category = ErrorCode::kInvariantViolation) {
    report_.findings.push_back({traj.task_id, traj.rollout_idx, std::move(field),
                                std::move(message), category, index, 0});
  }

 private:
  ValidationReport& report_;
};

// Returns a message when the state payload is unusable, nullopt otherwise.
std::optional<std::string> check_state(const StateRepr& state) {
  if (!state.is_vector()) return std::nullopt;
  const auto& values = state.as_vector();
  if (values.empty()) return "vector state is empty";
  for (double v : values) {
    if (!std::isfinite(v)) return "vector state contains a non-finite value";
  }
  return std::nullopt;
}

void check_metadata(const RunMetadata& meta, FindingSink& sink) {
  if (meta.run_id.empty()) sink.header("run_id", "run_id must be nonempty");
  if (meta.t_max < 1) sink.header("t_max", fmt::format("t_max must be >= 1, got {}", meta.t_max));
  if (meta.memory_mode.kind == MemoryMode::Kind::kWindowed && meta.memory_mode.window < 1) {
    sink.header("memory_mode", fmt::format("window size must be >= 1, got {}", meta.memory_mode.window));
  }
}

void check_trajectory(const Trajectory& traj, int index, FindingSink& sink) {
  if (traj.task_id.empty()) sink.trajectory(traj, index, "task_id", "task_id must be nonempty");
  if (traj.rollout_idx < 0) {
    sink.trajectory(traj, index, "rollout_idx", fmt::format("rollout_idx must be >= 0, got {}", traj.rollout_idx));
  }
  if (traj.steps.empty() && traj.success) {
    sink.trajectory(traj, index, "steps", "a successful trajectory needs at least one step");
  }
  if (traj.success && !traj.success_turn) {
    sink.trajectory(traj, index, "success_turn", "success is true but success_turn is absent");
  } else if (!traj.success && traj.success_turn) {
    sink.trajectory(traj, index, "success_turn", "success is false but success_turn is present");
  } else if (traj.success_turn) {
    const int turn = *traj.success_turn;
    const auto len = static_cast<int>(traj.steps.size());
    if (turn < 1 || turn > len) {
      sink.trajectory(traj, index, "success_turn",
                      fmt::format("success_turn {} outside [1, {}]", turn, len));
    }
  }
  if (auto problem = check_state(traj.final_state)) {
    sink.trajectory(traj, index, "final_state", *problem);
  }
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const Step& step = traj.steps[k];
    const std::string prefix = fmt::format("steps[{}].", k);
    if (step.turn != static_cast<int>(k)) {
      sink.trajectory(traj, index, prefix + "turn", fmt::format("turn {} does not match step index {}", step.turn, k));
    }
    if (step.action.empty()) sink.trajectory(traj, index, prefix + "action", "action must be nonempty");
    if (step.entropy && !(std::isfinite(*step.entropy) && *step.entropy >= 0.0)) {
      sink.trajectory(traj, index, prefix + "entropy", "entropy must be finite and >= 0");
    }
    if (auto problem = check_state(step.state)) sink.trajectory(traj, index, prefix + "state", *problem);
  }
}

void check_cosine_states(const Trajectory& traj, int index, std::optional<std::size_t>& dimension,
                         FindingSink& sink) {
  const auto states = traj.state_sequence();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const std::string field = k < traj.steps.size() ? fmt::format("steps[{}].state", k) : "final_state";
    const StateRepr& s = states[k];
    if (!s.is_vector()) {
      sink.trajectory(traj, index, field, "cosine state identity requires vector states",
                      ErrorCode::kSchemaViolation);
      return;
    }
    const auto& values = s.as_vector();
    if (values.empty()) continue;  // already reported
    if (!dimension) dimension = values.size();
    if (values.size() != *dimension) {
      sink.trajectory(traj, index, field,
                      fmt::format("vector dimension {} differs from run dimension {}", values.size(), *dimension),
                      ErrorCode::kSchemaViolation);
      return;
    }
    double norm = 0.0;
    for (double v : values) norm += v * v;
    if (norm == 0.0) {
      sink.trajectory(traj, index, field, "zero-norm vector cannot be compared by cosine",
                      ErrorCode::kSchemaViolation);
      return;
    }
  }
}

}  // namespace

ValidationReport validate_run(const RunLog& run, const StateIdentityConfig& identity) {
  ValidationReport report;
  FindingSink sink(report);
  check_metadata(run.metadata, sink);

  std::map<std::pair<std::string, int>, int> first_seen;
  std::optional<std::size_t> dimension;
  for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
    const Trajectory& traj = run.trajectories[i];
    const int index = static_cast<int>(i);
    check_trajectory(traj, index, sink);
    auto [it, inserted] = first_seen.try_emplace({traj.task_id, traj.rollout_idx}, index);
    if (!inserted) {
      sink.trajectory(traj, index, "rollout_idx",
                      fmt::format("duplicate (task_id, rollout_idx) = ({}, {}); first at trajectory {}",
                                  traj.task_id, traj.rollout_idx, it->second));
    }
    if (identity.mode == StateIdentityConfig::Mode::kCosine) check_cosine_states(traj, index, dimension, sink);
  }
  return report;
}

}  // namespace tide
