#pragma once

// Cycle and loop detection over a trajectory's state/action sequence.
//
// A cycle (i, j) is a span s_i, a_i, ..., a_{j-1}, s_j with s_i == s_j whose
// states s_i..s_{j-1} are pairwise distinct. A loop is a cycle that starts
// where the previously accepted cycle ended and repeats it element-wise
// (states and actions). Loop actions are the redundant ones; the Loop Ratio
// pools them over every action of a run.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "tide/state_identity.hpp"
#include "tide/trajectory.hpp"

namespace tide {

struct CycleSpan {
  std::size_t start = 0;  // state index i
  std::size_t end = 0;    // state index j, s_i == s_j
  std::size_t length() const { return end - start; }

  friend bool operator==(const CycleSpan&, const CycleSpan&) = default;
};

struct LoopSpan {
  CycleSpan cycle;
  CycleSpan repeats_prev;

  friend bool operator==(const LoopSpan&, const LoopSpan&) = default;
};

struct TrajectoryLoops {
  std::vector<CycleSpan> cycles;  // accepted cycles, loops included
  std::vector<LoopSpan> loops;
  std::vector<bool> mask;  // per action: inside an accepted loop
  std::size_t loop_action_count = 0;
};

/// Single left-to-right pass. A revisit of state s_t last seen at i yields
/// the candidate (i, t), rejected when its interior repeats a state or when
/// it starts before the previously accepted cycle's end. An accepted cycle
/// that starts at that end and matches the previous cycle element-wise is a
/// loop; every accepted cycle becomes the new previous cycle.
TrajectoryLoops detect_cycles_and_loops(const Trajectory& traj, const StateIdentityConfig& cfg);

/// Same detector on pre-computed state identity ids (ids.size() == actions.size() + 1).
TrajectoryLoops detect_cycles_and_loops(const std::vector<std::size_t>& state_ids,
                                        const std::vector<std::string>& actions);

struct LoopReport {
  double loop_ratio = 0.0;
  std::size_t total_actions = 0;
  std::size_t loop_action_count = 0;
  std::vector<std::vector<LoopSpan>> loops;  // per trajectory
  std::vector<std::vector<bool>> loop_step_mask;  // per trajectory
};

/// Pooled Loop Ratio: total loop actions over total actions.
LoopReport loop_ratio(const RunLog& run, const StateIdentityConfig& cfg);

/// Maps an action string to a class. Rules are tried in order; the first
/// match wins, otherwise the default rule applies (leading token, lowercased).
class ActionClassifier {
 public:
  ActionClassifier() = default;

  void add_prefix(std::string class_name, std::string prefix);
  void add_pattern(std::string class_name, const std::string& anchored_regex);

  /// Rule file: one rule per line, `NAME prefix:TEXT` or `NAME regex:PATTERN`;
  /// blank lines and lines starting with '#' are skipped.
  static ActionClassifier from_rules(std::istream& in);

  std::string classify(const std::string& action) const;

  /// First token of the action, split on whitespace or '(', lowercased.
  static std::string leading_token(const std::string& action);

 private:
  struct Rule {
    std::string class_name;
    std::optional<std::string> prefix;
    std::optional<std::regex> pattern;
  };
  std::vector<Rule> rules_;
};

struct ActionClassRatios {
  std::map<std::string, double> ratios;
  std::map<std::string, std::size_t> counts;
  std::size_t loop_actions = 0;
  bool no_loops = true;
};

ActionClassRatios action_class_loop_ratio(const RunLog& run, const StateIdentityConfig& cfg,
                                          const ActionClassifier& classifier);

struct EntropySplit {
  std::optional<double> mean_loop;
  std::optional<double> mean_nonloop;
  std::size_t n_loop = 0;
  std::size_t n_nonloop = 0;
  bool empty_partition() const { return n_loop == 0 || n_nonloop == 0; }
};

/// Mean per-step entropy on loop steps vs. the rest. Requires entropy on
/// every step (kMissingAnnotation otherwise).
EntropySplit entropy_split(const RunLog& run, const StateIdentityConfig& cfg);

}  // namespace tide
