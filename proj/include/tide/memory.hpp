#pragma once

#include <string>
#include <vector>

#include "tide/trajectory.hpp"

namespace tide {

enum class Alignment { kStrict, kIntersect };

Alignment parse_alignment(const std::string& text);

struct PairedRuns {
  RunLog with_memory;
  RunLog without_memory;
  Alignment alignment = Alignment::kStrict;
};

struct MemoryIndexResult {
  double mi = 0.0;
  double auv_with = 0.0;
  double auv_without = 0.0;
  int n_common_tasks = 0;
  // task_ids dropped by intersect alignment, per side.
  std::vector<std::string> excluded_with;
  std::vector<std::string> excluded_without;
};

/// AUV(with memory) - AUV(without memory) over task-aligned runs.
/// Strict alignment requires identical task sets and rollout counts per task.
MemoryIndexResult memory_index(const PairedRuns& pair, int t_max);

enum class Cohort { kAll, kSuccess, kFail };

std::string cohort_name(Cohort cohort);

struct RecallLagDistribution {
  Cohort cohort = Cohort::kAll;
  std::vector<int> lags;  // sorted ascending
  double mean = 0.0;      // 0 when lags is empty
};

/// Recall lags of one trajectory: for every step t and every target entity
/// interacted with at t, t minus the most recent earlier step whose
/// observation contained it. Entities never observed before t are skipped.
std::vector<int> trajectory_recall_lags(const Trajectory& traj);

/// Returns {all} or, with `cohort_split`, {all, success, fail}.
std::vector<RecallLagDistribution> recall_lag(const RunLog& run, bool cohort_split);

}  // namespace tide
