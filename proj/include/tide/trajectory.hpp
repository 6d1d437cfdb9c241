#pragma once

// Canonical in-memory form of a recorded agent run: metadata plus one
// Trajectory per task rollout. Each Step carries the state observed *before*
// its action; Trajectory::final_state closes the sequence, so a trajectory
// with T actions has T+1 states.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace tide {

using EntitySet = std::set<std::string>;

struct MemoryMode {
  enum class Kind { kFull, kNone, kWindowed };

  Kind kind = Kind::kFull;
  int window = 0;  // > 0 iff kind == kWindowed

  static MemoryMode full() { return {Kind::kFull, 0}; }
  static MemoryMode none() { return {Kind::kNone, 0}; }
  static MemoryMode windowed(int k) { return {Kind::kWindowed, k}; }

  std::string to_string() const;

  friend bool operator==(const MemoryMode&, const MemoryMode&) = default;
  friend auto operator<=>(const MemoryMode&, const MemoryMode&) = default;
};

struct RunMetadata {
  std::string run_id;
  std::string model_name;
  std::string environment_name;
  MemoryMode memory_mode;
  int t_max = 1;
  std::map<std::string, std::string> extra;
  // Unknown header keys, kept as serialized JSON so they round-trip.
  std::map<std::string, std::string> unknown_fields;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

class StateRepr {
 public:
  enum class Kind { kText, kVector };

  StateRepr() = default;
  static StateRepr text(std::string value);
  static StateRepr vector(std::vector<double> values);

  Kind kind() const { return std::holds_alternative<std::string>(payload_) ? Kind::kText : Kind::kVector; }
  bool is_text() const { return kind() == Kind::kText; }
  bool is_vector() const { return kind() == Kind::kVector; }
  const std::string& as_text() const { return std::get<std::string>(payload_); }
  const std::vector<double>& as_vector() const { return std::get<std::vector<double>>(payload_); }

  friend bool operator==(const StateRepr&, const StateRepr&) = default;

 private:
  std::variant<std::string, std::vector<double>> payload_;
};

struct Step {
  int turn = 0;
  StateRepr state;
  std::string action;
  std::optional<std::string> action_class;
  std::optional<double> entropy;
  std::optional<EntitySet> observed_entities;
  std::optional<EntitySet> interacted_entities;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::string task_id;
  int rollout_idx = 0;
  std::vector<Step> steps;
  StateRepr final_state;
  bool success = false;
  std::optional<int> success_turn;  // 1-based turns elapsed
  std::optional<EntitySet> target_entities;
  std::map<std::string, std::string> unknown_fields;

  std::size_t num_actions() const { return steps.size(); }
  /// States s_0..s_T: each step's pre-action state followed by final_state.
  std::vector<StateRepr> state_sequence() const;
  std::vector<std::string> action_sequence() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct RunLog {
  RunMetadata metadata;
  std::vector<Trajectory> trajectories;

  friend bool operator==(const RunLog&, const RunLog&) = default;
};

/// Orders trajectories by (task_id, rollout_idx).
void sort_trajectories(RunLog& run);

}  // namespace tide
