#include "tide/memory.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "tide/auv.hpp"
#include "tide/error.hpp"

namespace tide {

Alignment parse_alignment(const std::string& text) {
  if (text == "strict") return Alignment::kStrict;
  if (text == "intersect") return Alignment::kIntersect;
  throw Error(ErrorCode::kInvalidArgument, "alignment must be 'strict' or 'intersect', got '" + text + "'");
}

namespace {

std::map<std::string, int> rollouts_per_task(const RunLog& run) {
  std::map<std::string, int> counts;
  for (const auto& traj : run.trajectories) ++counts[traj.task_id];
  return counts;
}

RunLog restrict_to(const RunLog& run, const std::set<std::string>& tasks) {
  RunLog out;
  out.metadata = run.metadata;
  for (const auto& traj : run.trajectories) {
    if (tasks.count(traj.task_id) != 0) out.trajectories.push_back(traj);
  }
  return out;
}

}  // namespace

MemoryIndexResult memory_index(const PairedRuns& pair, int t_max) {
  const auto with_counts = rollouts_per_task(pair.with_memory);
  const auto without_counts = rollouts_per_task(pair.without_memory);
  MemoryIndexResult result;

  std::set<std::string> common;
  for (const auto& [task, count] : with_counts) {
    if (without_counts.count(task) != 0) {
      common.insert(task);
    } else {
      result.excluded_with.push_back(task);
    }
  }
  for (const auto& [task, count] : without_counts) {
    if (with_counts.count(task) == 0) result.excluded_without.push_back(task);
  }

  if (pair.alignment == Alignment::kStrict) {
    if (!result.excluded_with.empty() || !result.excluded_without.empty()) {
      throw Error(ErrorCode::kStrictAlignmentViolation,
                  fmt::format("task sets differ ({} only with memory, {} only without)",
                              result.excluded_with.size(), result.excluded_without.size()));
    }
    for (const auto& [task, count] : with_counts) {
      if (without_counts.at(task) != count) {
        throw Error(ErrorCode::kStrictAlignmentViolation,
                    fmt::format("task '{}' has {} rollouts with memory but {} without", task, count,
                                without_counts.at(task)));
      }
    }
  }
  if (common.empty()) throw Error(ErrorCode::kNoCommonTasks, "the two runs share no task_id");

  const RunLog with_run = restrict_to(pair.with_memory, common);
  const RunLog without_run = restrict_to(pair.without_memory, common);
  result.auv_with = auv_trapezoid(build_success_curve(with_run, t_max));
  result.auv_without = auv_trapezoid(build_success_curve(without_run, t_max));
  result.mi = result.auv_with - result.auv_without;
  result.n_common_tasks = static_cast<int>(common.size());
  return result;
}

std::string cohort_name(Cohort cohort) {
  switch (cohort) {
    case Cohort::kAll: return "all";
    case Cohort::kSuccess: return "success";
    case Cohort::kFail: return "fail";
  }
  return "all";
}

std::vector<int> trajectory_recall_lags(const Trajectory& traj) {
  const auto missing = [&](const std::string& what) {
    return Error(ErrorCode::kMissingAnnotation,
                 fmt::format("{} missing in task '{}' rollout {}", what, traj.task_id, traj.rollout_idx));
  };
  if (!traj.target_entities) throw missing("target_entities");
  for (const auto& step : traj.steps) {
    if (!step.observed_entities || !step.interacted_entities) {
      throw missing(fmt::format("entity annotations at turn {}", step.turn));
    }
  }

  std::vector<int> lags;
  std::unordered_map<std::string, int> last_seen;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& step = traj.steps[t];
    const int now = static_cast<int>(t);
    // Interaction is measured against observations strictly before t.
    for (const auto& obj : *step.interacted_entities) {
      if (traj.target_entities->count(obj) == 0) continue;
      auto it = last_seen.find(obj);
      if (it != last_seen.end()) lags.push_back(now - it->second);
    }
    for (const auto& obj : *step.observed_entities) last_seen[obj] = now;
  }
  return lags;
}

namespace {

RecallLagDistribution make_distribution(Cohort cohort, std::vector<int> lags) {
  std::sort(lags.begin(), lags.end());
  RecallLagDistribution d;
  d.cohort = cohort;
  if (!lags.empty()) {
    const long long sum = std::accumulate(lags.begin(), lags.end(), 0LL);
    d.mean = static_cast<double>(sum) / static_cast<double>(lags.size());
  }
  d.lags = std::move(lags);
  return d;
}

}  // namespace

std::vector<RecallLagDistribution> recall_lag(const RunLog& run, bool cohort_split) {
  std::vector<int> all;
  std::vector<int> success;
  std::vector<int> fail;
  for (const auto& traj : run.trajectories) {
    const auto lags = trajectory_recall_lags(traj);
    all.insert(all.end(), lags.begin(), lags.end());
    auto& side = traj.success ? success : fail;
    side.insert(side.end(), lags.begin(), lags.end());
  }
  std::vector<RecallLagDistribution> out;
  out.push_back(make_distribution(Cohort::kAll, std::move(all)));
  if (cohort_split) {
    out.push_back(make_distribution(Cohort::kSuccess, std::move(success)));
    out.push_back(make_distribution(Cohort::kFail, std::move(fail)));
  }
  return out;
}

}  // namespace tide
